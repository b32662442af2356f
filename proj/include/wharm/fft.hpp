#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "errors.hpp"
#include "grid.hpp"

namespace wharm {

using cplx = std::complex<double>;

// Frequency sample handed to multipliers: xi = pi k / L, k the signed index in [-N/2, N/2).
struct Frequency {
    Point xi{0.0, 0.0};
    Index k{0, 0};
    bool nyquist(int axis, int N) const { return k[axis] == -N / 2; }
    double norm(int n) const { return n == 1 ? std::abs(xi[0]) : std::hypot(xi[0], xi[1]); }
};

namespace detail {
inline void fft_lines(std::vector<cplx>& d, int n0, int n1, bool along_last, bool inverse) {
    Eigen::FFT<double> fft;
    const int len = along_last ? n1 : n0;
    const int lines = along_last ? n0 : n1;
    std::vector<cplx> in(len), out(len);
    for (int l = 0; l < lines; ++l) {
        for (int i = 0; i < len; ++i) in[i] = along_last ? d[static_cast<std::size_t>(l) * n1 + i] : d[static_cast<std::size_t>(i) * n1 + l];
        if (inverse)
            fft.inv(out, in);
        else
            fft.fwd(out, in);
        for (int i = 0; i < len; ++i) {
            if (along_last)
                d[static_cast<std::size_t>(l) * n1 + i] = out[i];
            else
                d[static_cast<std::size_t>(i) * n1 + l] = out[i];
        }
    }
}
}  // namespace detail

// Periodic discrete Fourier transform of a FullSpace grid function.
class Spectrum {
public:
    explicit Spectrum(const GridFunction& f) : grid_(f.grid()) {
        if (!grid_.is_full()) throw BackendError("Fourier multipliers need a FullSpace grid");
        data_.assign(f.values().begin(), f.values().end());
        transform(false);
    }

    const Grid& grid() const { return grid_; }

    template <class M>
    GridFunction apply(M&& multiplier) const {
        const int n = grid_.dim();
        const int N = grid_.points_per_axis();
        const double L = grid_.halfwidth();
        std::vector<cplx> d(data_.size());
        for (std::size_t f = 0; f < d.size(); ++f) {
            Index idx = grid_.index(f);
            Frequency q;
            for (int a = 0; a < n; ++a) {
                int k = idx[a] < N / 2 ? idx[a] : idx[a] - N;
                q.k[a] = k;
                q.xi[a] = std::numbers::pi * k / L;
            }
            d[f] = data_[f] * cplx(multiplier(q));
        }
        Spectrum tmp(grid_, std::move(d));
        tmp.transform(true);
        GridFunction out(grid_);
        for (std::size_t f = 0; f < out.size(); ++f) out[f] = tmp.data_[f].real();
        return out;
    }

private:
    Spectrum(const Grid& g, std::vector<cplx> d) : grid_(g), data_(std::move(d)) {}

    void transform(bool inverse) {
        const int N = grid_.points_per_axis();
        if (grid_.dim() == 1) {
            detail::fft_lines(data_, 1, N, true, inverse);
        } else {
            detail::fft_lines(data_, N, N, true, inverse);
            detail::fft_lines(data_, N, N, false, inverse);
        }
    }

    Grid grid_;
    std::vector<cplx> data_;
};

}  // namespace wharm
