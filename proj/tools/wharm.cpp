#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "wharm/atoms.hpp"
#include "wharm/bmo.hpp"
#include "wharm/harness.hpp"
#include "wharm/io.hpp"
#include "wharm/operators.hpp"
#include "wharm/squarefn.hpp"
#include "wharm/weights.hpp"

using namespace wharm;
using json = nlohmann::ordered_json;

namespace {

struct GridOpts {
    int dim = 1;
    double halfwidth = 1.0;
    int points = 256;
    std::string domain = "full";

    void add(CLI::App* app) {
        app->add_option("--dim", dim, "spatial dimension (1 or 2)");
        app->add_option("--halfwidth", halfwidth, "box half width L");
        app->add_option("--points", points, "points per axis N");
        app->add_option("--domain", domain, "full | upper | lower");
    }
    Grid grid() const { return Grid(dim, halfwidth, points, domain_from_string(domain)); }
};

GridFunction load(const std::string& path, const GridOpts& g) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return io::load_json_bin(path);
    return io::load_grid_function(path, g.grid());
}

void save(const GridFunction& f, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << io::to_csv(f);
        return;
    }
    if (out.size() >= 5 && out.substr(out.size() - 5) == ".json")
        io::save_json_bin(f, out);
    else
        io::write_text(out, io::to_csv(f));
}

Weight weight_arg(const std::string& spec, const Grid& g) {
    if (spec.empty()) return Weight::constant(g, 1.0);
    return io::file_weight_factory().make(g, io::weight_spec_from_json(json::parse(spec)));
}

// identity | heat-{free,neumann,dirichlet} | qt | psi | riesz-{free,neumann,dirichlet}-j
OperatorHandle parse_op(const std::string& name, double t, const std::string& backend) {
    Backend be = backend == "fourier" ? Backend::FourierMultiplier : Backend::Quadrature;
    auto fam = [](const std::string& s) {
        if (s == "free") return Family::Free;
        if (s == "neumann") return Family::Neumann;
        if (s == "dirichlet") return Family::Dirichlet;
        throw ParameterError("unknown family '" + s + "'");
    };
    if (name == "identity") return OperatorHandle::identity();
    if (name == "qt") return OperatorHandle::qt(t, be);
    if (name == "psi") return OperatorHandle::psi(t, be);
    if (name.rfind("heat-", 0) == 0) return OperatorHandle::semigroup(fam(name.substr(5)), t, be);
    if (name.rfind("riesz-", 0) == 0) {
        auto dash = name.rfind('-');
        if (dash <= 6) throw ParameterError("riesz operators are named riesz-<family>-<j>");
        return OperatorHandle::riesz(fam(name.substr(6, dash - 6)), std::stoi(name.substr(dash + 1)), be);
    }
    throw ParameterError("unknown operator '" + name + "'");
}

GridFunction sample_named(const std::string& fn, const Grid& g, double sigma, double freq) {
    const int n = g.dim();
    if (fn == "gauss") return GridFunction::sample(g, [&](Point x) { return std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2 * sigma * sigma)); });
    if (fn == "gauss-deriv")
        return GridFunction::sample(g, [&](Point x) { return x[0] * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2 * sigma * sigma)); });
    if (fn == "cos") return GridFunction::sample(g, [&](Point x) { return std::cos(std::numbers::pi * freq * x[0] / g.halfwidth()); });
    if (fn == "log-last") return GridFunction::sample(g, [&](Point x) { return std::log(std::abs(x[n - 1])); });
    if (fn == "sign-last") return GridFunction::sample(g, [&](Point x) { return x[n - 1] > 0 ? 1.0 : -1.0; });
    throw ParameterError("unknown function '" + fn + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted harmonic analysis toolkit"};
    app.require_subcommand(1);

    // sample
    GridOpts sg;
    std::string s_fn = "gauss-deriv", s_weight, s_out;
    double s_sigma = 0.1, s_freq = 1.0;
    auto* sample = app.add_subcommand("sample", "sample a named function or a weight on a grid");
    sg.add(sample);
    sample->add_option("--function", s_fn, "gauss | gauss-deriv | cos | log-last | sign-last");
    sample->add_option("--sigma", s_sigma, "width of the Gaussian profiles");
    sample->add_option("--freq", s_freq, "cosine frequency in units of pi/L");
    sample->add_option("--weight", s_weight, "weight spec as JSON; overrides --function");
    sample->add_option("--out", s_out, "output .csv or .json (default stdout CSV)");

    // apply
    GridOpts ag;
    std::string a_in, a_op = "riesz-free-1", a_backend = "quadrature", a_out, a_symbol;
    double a_t = 0.1;
    auto* apply_cmd = app.add_subcommand("apply", "apply an operator or a commutator");
    ag.add(apply_cmd);
    apply_cmd->add_option("--in", a_in, "input grid function")->required();
    apply_cmd->add_option("--op", a_op, "operator name");
    apply_cmd->add_option("--t", a_t, "time parameter");
    apply_cmd->add_option("--backend", a_backend, "quadrature | fourier");
    apply_cmd->add_option("--symbol", a_symbol, "commutator symbol b (grid function)");
    apply_cmd->add_option("--out", a_out, "output file");

    // opnorm
    GridOpts og;
    std::string o_op = "riesz-neumann-1", o_backend = "quadrature", o_symbol, o_mu, o_lambda, o_method = "svd";
    double o_t = 0.1, o_p = 2.0;
    unsigned long long o_seed = 12345;
    auto* opnorm = app.add_subcommand("opnorm", "weighted operator norm ||T : L^p_mu -> L^p_lambda||");
    og.add(opnorm);
    opnorm->add_option("--op", o_op, "operator name");
    opnorm->add_option("--t", o_t, "time parameter");
    opnorm->add_option("--backend", o_backend, "quadrature | fourier");
    opnorm->add_option("--symbol", o_symbol, "commutator symbol b");
    opnorm->add_option("--mu", o_mu, "source weight spec (JSON)");
    opnorm->add_option("--lambda", o_lambda, "target weight spec (JSON)");
    opnorm->add_option("--p", o_p, "exponent");
    opnorm->add_option("--method", o_method, "svd | ascent");
    opnorm->add_option("--seed", o_seed, "ascent seed");

    // squarefn
    GridOpts qg;
    std::string q_in, q_gen = "heat", q_cone = "free", q_out;
    int q_octave = 8;
    auto* sqf = app.add_subcommand("squarefn", "conical square function");
    qg.add(sqf);
    sqf->add_option("--in", q_in, "input grid function")->required();
    sqf->add_option("--generator", q_gen, "heat | psi | phi-log | phi-gauss");
    sqf->add_option("--cone", q_cone, "free | neumann");
    sqf->add_option("--per-octave", q_octave, "time samples per octave");
    sqf->add_option("--out", q_out, "output file");

    // bmo
    GridOpts bg;
    std::string b_in, b_weight, b_flavor = "classical-w";
    double b_r = 1.0;
    auto* bmo = app.add_subcommand("bmo", "BMO norm of a grid function");
    bg.add(bmo);
    bmo->add_option("--in", b_in, "input grid function")->required();
    bmo->add_option("--weight", b_weight, "weight spec (JSON)");
    bmo->add_option("--flavor", b_flavor, "flavor name");
    bmo->add_option("--r", b_r, "exponent for classical-wr");

    // ap
    GridOpts pg;
    std::string p_weight;
    double p_p = 2.0;
    auto* ap = app.add_subcommand("ap", "A^p and A^p_{Delta_N} constants of a weight");
    pg.add(ap);
    ap->add_option("--weight", p_weight, "weight spec (JSON)")->required();
    ap->add_option("--p", p_p, "exponent");

    // decompose
    GridOpts dg;
    std::string d_in, d_gen = "heat", d_weight, d_out;
    double d_p = 2.0;
    auto* dec = app.add_subcommand("decompose", "level-set atomic decomposition (n=1)");
    dg.add(dec);
    dec->add_option("--in", d_in, "input grid function")->required();
    dec->add_option("--generator", d_gen, "heat | phi-log");
    dec->add_option("--weight", d_weight, "weight spec (JSON)");
    dec->add_option("--p", d_p, "atom exponent");
    dec->add_option("--out", d_out, "output JSON");

    // harness run
    std::string h_exp, h_config, h_out, h_csv;
    auto* harness_cmd = app.add_subcommand("harness", "experiment runner");
    auto* run = harness_cmd->add_subcommand("run", "run one experiment");
    harness_cmd->require_subcommand(1);
    run->add_option("experiment", h_exp, "two-weight-commutator | riesz-ap-characterization | dirichlet-counterexample | "
                                         "bmo-coincidence | john-nirenberg")
        ->required();
    run->add_option("--config", h_config, "config JSON");
    run->add_option("--out", h_out, "report JSON")->required();
    run->add_option("--csv", h_csv, "flat CSV mirror of the rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) {
            Grid g = sg.grid();
            GridFunction f = s_weight.empty() ? sample_named(s_fn, g, s_sigma, s_freq) : weight_arg(s_weight, g).function();
            save(f, s_out);
        } else if (*apply_cmd) {
            GridFunction f = load(a_in, ag);
            OperatorHandle op = parse_op(a_op, a_t, a_backend);
            GridFunction r = a_symbol.empty() ? apply(op, f) : commutator_apply(load(a_symbol, ag), op, f);
            save(r, a_out);
        } else if (*opnorm) {
            Grid g = og.grid();
            OperatorHandle op = parse_op(o_op, o_t, o_backend);
            if (!o_symbol.empty()) op = OperatorHandle::commutator(load(o_symbol, og), op);
            AscentOptions ao;
            ao.seed = o_seed;
            NormMethod m = o_method == "ascent" ? NormMethod::IterativeAscent : NormMethod::SvdExact;
            auto c = weighted_operator_norm(op, weight_arg(o_mu, g), weight_arg(o_lambda, g), o_p, m, ao);
            json j{{"norm", c.value}, {"method", o_method}, {"converged", c.converged}, {"iterations", c.iterations}};
            if (m == NormMethod::IterativeAscent) j["lower_bound"] = true;
            std::cout << j.dump(2) << "\n";
        } else if (*sqf) {
            GridFunction f = load(q_in, qg);
            Grid full = f.grid().full();
            TimeGrid tg = TimeGrid::standard(full, q_octave);
            save(area_function(f, generator_from_string(q_gen), q_cone == "neumann" ? ConeKind::Neumann : ConeKind::Free, tg),
                 q_out);
        } else if (*bmo) {
            GridFunction f = load(b_in, bg);
            BmoKind k = bmo_kind_from_string(b_flavor);
            BmoFlavor fl = k == BmoKind::ClassicalWr ? BmoFlavor::classical_r(b_r) : BmoFlavor::of(k);
            Grid eg = bmo_evaluation_grid(k, f.grid());
            Grid wg = k == BmoKind::UnweightedHalf ? f.grid() : eg;
            LatticeSet lats = standard_lattices(eg, max_generation_for(eg, 1));
            auto r = bmo_norm_detail(f, weight_arg(b_weight, wg), fl, lats);
            std::cout << json{{"flavor", b_flavor}, {"norm", r.value}, {"lattice", r.lattice}, {"cube", r.cube}}.dump(2)
                      << "\n";
        } else if (*ap) {
            Grid g = pg.grid();
            Weight w = weight_arg(p_weight, g);
            LatticeSet lats = standard_lattices(g, max_generation_for(g, 1));
            json j{{"ap", ap_constant(w, p_p, lats).value}};
            if (g.is_full()) j["ap_deltaN"] = ap_deltaN_constant(w, p_p, lats);
            std::cout << j.dump(2) << "\n";
        } else if (*dec) {
            GridFunction f = load(d_in, dg);
            DecompositionOptions o;
            o.p = d_p;
            auto D = atomic_decompose(f, generator_from_string(d_gen), weight_arg(d_weight, f.grid()), o);
            std::string text = io::decomposition_to_json(D).dump(2) + "\n";
            if (d_out.empty())
                std::cout << text;
            else
                io::write_text(d_out, text);
        } else if (*run) {
            json cfg = h_config.empty() ? json::object() : json::parse(io::read_text(h_config));
            std::string dir = h_config.find('/') == std::string::npos ? "" : h_config.substr(0, h_config.find_last_of('/'));
            auto rep = harness::run(h_exp, cfg, dir);
            io::write_text(h_out, rep.to_json().dump(2) + "\n");
            if (!h_csv.empty()) io::write_text(h_csv, rep.to_csv());
            std::cout << h_exp << ": " << (rep.pass ? "PASS" : "FAIL") << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 0;
}
