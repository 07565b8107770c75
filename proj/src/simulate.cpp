#include "gpident/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gpident {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct SpectralOps::Impl {
    int n = 0;
    int keep = 0;  // highest retained mode index
    std::vector<double> k;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_complex* work = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

SpectralOps::SpectralOps(int n, double length, bool dealias) : impl_(std::make_unique<Impl>()) {
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("SpectralOps: need an even number of points >= 4");
    Impl& s = *impl_;
    s.n = n;
    const int half = n / 2;
    s.keep = dealias ? (n - 1) / 3 : half;
    s.k.resize(static_cast<std::size_t>(half + 1));
    for (int j = 0; j <= half; ++j) s.k[j] = 2.0 * std::numbers::pi * j / length;
    std::lock_guard<std::mutex> lock(fftw_mutex());
    s.real = fftw_alloc_real(static_cast<std::size_t>(n));
    s.spec = fftw_alloc_complex(static_cast<std::size_t>(half + 1));
    s.work = fftw_alloc_complex(static_cast<std::size_t>(half + 1));
    s.fwd = fftw_plan_dft_r2c_1d(n, s.real, s.spec, FFTW_ESTIMATE);
    s.bwd = fftw_plan_dft_c2r_1d(n, s.work, s.real, FFTW_ESTIMATE);
}

SpectralOps::~SpectralOps() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->bwd);
    fftw_free(impl_->real);
    fftw_free(impl_->spec);
    fftw_free(impl_->work);
}

double SpectralOps::k_max() const { return impl_->k[static_cast<std::size_t>(impl_->keep)]; }

void SpectralOps::derivatives(const Eigen::VectorXd& u, int max_order, std::vector<Eigen::VectorXd>& out) {
    Impl& s = *impl_;
    if (u.size() != s.n)
        throw std::invalid_argument("SpectralOps: state length mismatch");
    const int half = s.n / 2;
    std::copy(u.data(), u.data() + s.n, s.real);
    fftw_execute(s.fwd);
    out.resize(static_cast<std::size_t>(max_order + 1));
    const double scale = 1.0 / s.n;
    for (int o = 0; o <= max_order; ++o) {
        for (int j = 0; j <= half; ++j) {
            std::complex<double> c(s.spec[j][0], s.spec[j][1]);
            if (j > s.keep || (j == half && o % 2 == 1)) {
                c = 0.0;
            } else if (o > 0) {
                c *= std::pow(std::complex<double>(0.0, s.k[j]), o);
            }
            s.work[j][0] = c.real() * scale;
            s.work[j][1] = c.imag() * scale;
        }
        fftw_execute(s.bwd);
        out[o] = Eigen::Map<const Eigen::VectorXd>(s.real, s.n);
    }
}

void SpectralOps::project(Eigen::VectorXd& v) {
    Impl& s = *impl_;
    const int half = s.n / 2;
    if (s.keep >= half) return;
    std::copy(v.data(), v.data() + s.n, s.real);
    fftw_execute(s.fwd);
    const double scale = 1.0 / s.n;
    for (int j = 0; j <= half; ++j) {
        const bool kept = j <= s.keep;
        s.work[j][0] = kept ? s.spec[j][0] * scale : 0.0;
        s.work[j][1] = kept ? s.spec[j][1] * scale : 0.0;
    }
    fftw_execute(s.bwd);
    v = Eigen::Map<const Eigen::VectorXd>(s.real, s.n);
}

PDEProblem make_problem(PDEKind kind, std::string name, Grid grid, std::function<double(double)> initial,
                        const std::vector<std::pair<std::string, CoefficientField>>& terms) {
    PDEProblem p;
    p.kind = kind;
    p.name = std::move(name);
    p.grid = grid;
    p.initial = std::move(initial);
    for (const auto& [label, field] : terms) {
        const FeatureSpec spec = FeatureSpec::from_label(label);
        const std::string canonical = spec.label();
        CoefficientField f = field;
        if (f.label.empty()) f.label = canonical;
        p.terms.push_back({spec, f});
        p.true_support.push_back(canonical);
        p.true_coeff_fields.emplace(canonical, f);
    }
    return p;
}

namespace {

/// Coefficient samples at the grid points, remembered for the last two times.
class CoefficientCache {
public:
    CoefficientCache(const CoefficientField& field, const std::vector<double>& xs) : field_(field), xs_(xs) {}

    const Eigen::VectorXd& at(double t) {
        for (auto& slot : slots_)
            if (slot.valid && slot.t == t) return slot.values;
        Slot& s = slots_[next_];
        next_ = 1 - next_;
        s.t = t;
        s.valid = true;
        field_.sample_column(xs_, t, s.values);
        return s.values;
    }

private:
    struct Slot {
        double t = 0.0;
        bool valid = false;
        Eigen::VectorXd values;
    };
    const CoefficientField& field_;
    const std::vector<double>& xs_;
    Slot slots_[2];
    int next_ = 0;
};

int max_order_of(const PDEProblem& p) {
    int m = 0;
    for (const auto& term : p.terms) m = std::max(m, term.feature.max_order());
    return m;
}

std::vector<double> grid_points(const Grid& g) {
    std::vector<double> xs(static_cast<std::size_t>(g.I));
    for (int i = 0; i < g.I; ++i) xs[i] = g.x(i);
    return xs;
}

Eigen::VectorXd initial_state(const PDEProblem& p, SpectralOps& ops) {
    if (!p.initial)
        throw std::invalid_argument("PDE problem '" + p.name + "' has no initial condition");
    Eigen::VectorXd u(p.grid.I);
    for (int i = 0; i < p.grid.I; ++i) u[i] = p.initial(p.grid.x(i));
    ops.project(u);
    return u;
}

}  // namespace

namespace {

int stability_substeps(const PDEProblem& problem, double safety, bool dealias) {
    if (!(safety > 0.0))
        throw std::invalid_argument("auto_substeps: safety must be positive");
    const Grid& g = problem.grid;
    SpectralOps ops(g.I, g.x_length(), dealias);
    const int max_order = max_order_of(problem);
    std::vector<Eigen::VectorXd> d;
    ops.derivatives(initial_state(problem, ops), max_order, d);
    std::vector<double> dmax(d.size());
    for (std::size_t o = 0; o < d.size(); ++o) dmax[o] = d[o].cwiseAbs().maxCoeff();

    const double kmax = ops.k_max();
    const std::vector<double> xs = grid_points(g);
    const double amplitude_margin = 1.5;
    double rho = 0.0;
    for (const auto& term : problem.terms) {
        double cmax = 0.0;
        for (int q = 0; q <= 8; ++q) {
            const double t = g.t_min + g.t_length() * q / 8.0;
            for (double x : xs) cmax = std::max(cmax, std::abs(term.coeff(x, t)));
        }
        const auto& f = term.feature.factors;
        for (std::size_t j = 0; j < f.size(); ++j) {
            double others = 1.0;
            for (std::size_t i = 0; i < f.size(); ++i)
                if (i != j) others *= amplitude_margin * dmax[static_cast<std::size_t>(f[i])];
            rho += cmax * others * std::pow(kmax, f[j]);
        }
    }
    if (!(rho > 0.0)) return 1;
    const double h = safety * 2.5 / rho;
    return std::max(1, static_cast<int>(std::ceil(g.dt() / h)));
}

}  // namespace

int auto_substeps(const PDEProblem& problem, double safety, bool dealias, double tol) {
    int s = stability_substeps(problem, safety, dealias);
    if (!(tol > 0.0)) return s;
    // the initial transient carries most of the time-stepping error
    const Grid& g = problem.grid;
    const int steps = 7;
    if (g.N <= steps + 1) return s;
    PDEProblem head = problem;
    head.grid = Grid(g.x_min, g.x_max, g.t_min, g.t(steps), g.I, steps + 1);
    for (int doubling = 0; doubling < 10; ++doubling) {
        const Trajectory a = solve(head, {s, safety, dealias});
        const Trajectory b = solve(head, {2 * s, safety, dealias});
        if ((a.values - b.values).cwiseAbs().maxCoeff() < tol) break;
        s *= 2;
    }
    return s;
}

Trajectory solve(const PDEProblem& problem, const SolveOptions& opts) {
    const Grid& g = problem.grid;
    const int substeps = opts.substeps > 0 ? opts.substeps : auto_substeps(problem, opts.safety, opts.dealias);
    SpectralOps ops(g.I, g.x_length(), opts.dealias);
    const int max_order = max_order_of(problem);
    const std::vector<double> xs = grid_points(g);

    std::vector<CoefficientCache> caches;
    caches.reserve(problem.terms.size());
    for (const auto& term : problem.terms) caches.emplace_back(term.coeff, xs);

    std::vector<Eigen::VectorXd> d;
    Eigen::VectorXd prod(g.I);
    auto rhs = [&](const Eigen::VectorXd& u, double t, Eigen::VectorXd& out) {
        ops.derivatives(u, max_order, d);
        out.setZero(g.I);
        for (std::size_t k = 0; k < problem.terms.size(); ++k) {
            prod = caches[k].at(t);
            for (int o : problem.terms[k].feature.factors) prod.array() *= d[static_cast<std::size_t>(o)].array();
            out += prod;
        }
        ops.project(out);
    };

    Eigen::MatrixXd values(g.I, g.N);
    Eigen::VectorXd u = initial_state(problem, ops);
    values.col(0) = u;
    const double h = g.dt() / substeps;
    Eigen::VectorXd k1(g.I), k2(g.I), k3(g.I), k4(g.I), tmp(g.I);
    for (int n = 1; n < g.N; ++n) {
        const double t0 = g.t(n - 1);
        for (int s = 0; s < substeps; ++s) {
            const double t = t0 + s * h;
            rhs(u, t, k1);
            tmp = u + 0.5 * h * k1;
            rhs(tmp, t + 0.5 * h, k2);
            tmp = u + 0.5 * h * k2;
            rhs(tmp, t + 0.5 * h, k3);
            tmp = u + h * k3;
            rhs(tmp, t + h, k4);
            u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!u.allFinite()) {
            std::ostringstream msg;
            msg << "solve: '" << problem.name << "' blew up before t = " << g.t(n);
            throw std::runtime_error(msg.str());
        }
        values.col(n) = u;
    }
    return Trajectory(g, std::move(values));
}

PDEProblem make_advection_diffusion() {
    constexpr double pi = std::numbers::pi;
    const double w = 2.0 * pi / 5.0;
    return make_problem(PDEKind::AdvectionDiffusion, "advection_diffusion", Grid(-5.0, 5.0, 0.0, 5.0, 256, 256),
                        [w](double x) { return std::cos(w * x); },
                        {{"u", {[w](double x, double) { return -w * std::sin(w * x); }, "a'(x)"}},
                         {"u_x", {[w](double x, double) { return -1.5 + std::cos(w * x); }, "a(x)"}},
                         {"u_xx", CoefficientField::constant(0.1, "0.1")}});
}

PDEProblem make_burgers() {
    constexpr double pi = std::numbers::pi;
    const double T = 0.02;
    auto initial = [](double x) {
        return std::sin(pi * (2 * x - 0.1)) + std::cos(pi * (5 * x - 0.2)) +
               std::cos(pi * (3 * x - 0.3)) * std::cos(pi * (x + 0.1)) + std::sin(pi * (4 * x + 0.5)) + 5.0;
    };
    CoefficientField a{[T](double x, double t) {
                           return 4.0 * (1.0 + tau(t, +1, 10.0, T / 3.0, T)) * (2.0 + std::sin(pi * x));
                       },
                       "a(x,t)"};
    CoefficientField b{[T](double, double t) { return 0.8 * (1.0 + tau(t, -1, 10.0, T / 2.0, T)); }, "b(t)"};
    return make_problem(PDEKind::Burgers, "burgers", Grid(-2.0, 2.0, 0.0, T, 256, 256), initial,
                        {{"u*u_x", a}, {"u_xx", b}});
}

PDEProblem make_fisher() {
    const double T = 0.8;
    auto initial = [](double x) {
        constexpr double pi = std::numbers::pi;
        return 5.0 * std::exp(-x * x) + 3.0 * std::exp(-(2 * x + 4) * (2 * x + 4)) +
               2.0 * std::exp(-(3 * x - 3) * (3 * x - 3)) + 4.0 * std::exp(-(2 * x + 8) * (2 * x + 8)) +
               std::cos(4.0 * (x + 1.0) * pi / 10.0);
    };
    auto a = [T](double t) { return 1.0 + tau(t, -1, 10.0, 0.8 / 3.0, T) + tau(t, +1, 10.0, 1.6 / 3.0, T); };
    return make_problem(PDEKind::Fisher, "fisher", Grid(-5.0, 5.0, 0.0, T, 256, 512), initial,
                        {{"u", {[a](double, double t) { return a(t); }, "a(t)"}},
                         {"u_xx", CoefficientField::constant(0.5, "0.5")},
                         {"u^2", {[a](double, double t) { return -a(t); }, "-a(t)"}}});
}

double kdv_default_initial(double x) {
    constexpr double pi = std::numbers::pi;
    return 0.6 * std::cos(pi * x / 2.0) + 0.3 * std::sin(1.5 * pi * x + 0.5) + 0.25 * std::cos(2.5 * pi * x + 0.2);
}

PDEProblem make_kdv(std::function<double(double)> initial) {
    constexpr double pi = std::numbers::pi;
    const double T = 0.1;
    if (!initial) initial = kdv_default_initial;
    CoefficientField a{[T](double x, double t) {
                           return 0.5 * (2.0 + 0.3 * std::cos(pi * x / 2.0)) * (1.0 + tau(t, +1, 10.0, 0.05, T));
                       },
                       "a(x,t)"};
    CoefficientField b{[T](double x, double t) {
                           return 0.01 * (0.5 + 0.1 * std::sin(pi * x / 2.0)) * (1.0 + tau(t, -1, 10.0, 0.05, T));
                       },
                       "b(x,t)"};
    return make_problem(PDEKind::KdV, "kdv", Grid(-2.0, 2.0, 0.0, T, 256, 512), std::move(initial),
                        {{"u*u_x", a}, {"u_xxx", b}});
}

std::vector<std::string> preset_names() { return {"advection_diffusion", "burgers", "fisher", "kdv"}; }

PDEProblem make_preset(const std::string& name) {
    if (name == "advection_diffusion") return make_advection_diffusion();
    if (name == "burgers") return make_burgers();
    if (name == "fisher") return make_fisher();
    if (name == "kdv") return make_kdv();
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (available: " + known + ")");
}

}  // namespace gpident
