#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace wharm {

// A constant fitted on the first half of a suite (its max ratio) and checked on the second half,
// which may exceed it by at most the given slack factor.
struct FittedConstant {
    double fitted = 0.0;
    double holdout_max = 0.0;
    double slack = 2.0;
    std::size_t fit_count = 0;
    std::size_t check_count = 0;
    bool holds = true;
};

inline FittedConstant fit_constant(const std::vector<double>& ratios, double slack = 2.0) {
    FittedConstant c;
    c.slack = slack;
    const std::size_t half = (ratios.size() + 1) / 2;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (i < half) {
            c.fitted = std::max(c.fitted, ratios[i]);
            ++c.fit_count;
        } else {
            c.holdout_max = std::max(c.holdout_max, ratios[i]);
            ++c.check_count;
        }
    }
    c.holds = c.holdout_max <= slack * c.fitted;
    return c;
}

struct Band {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    std::size_t count = 0;

    void add(double r) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        ++count;
    }
    bool finite() const { return count > 0 && std::isfinite(lo) && std::isfinite(hi) && lo > 0; }
    double spread() const { return finite() ? hi / lo : std::numeric_limits<double>::infinity(); }
};

inline Band band_of(const std::vector<double>& r) {
    Band b;
    for (double x : r) b.add(x);
    return b;
}

// Average ranks (ties share the mean rank).
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double mean = 0.5 * static_cast<double>(i + j);
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean;
        i = j + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace wharm
