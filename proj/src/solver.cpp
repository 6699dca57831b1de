#include "polyma/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace polyma {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using IVec3 = Eigen::Vector3i;

int igcd(int a, int b) { return b == 0 ? std::abs(a) : igcd(b, a % b); }

/// Direction lines and orthogonal frames of the wide stencil.
struct DirSet {
    std::vector<IVec3> lines;
    std::vector<double> len;
    std::vector<std::vector<int>> frames;
    std::string id;
};

DirSet dirset_2d(int target_lines) {
    struct Cand {
        IVec3 v;
        double norm2, angle;
    };
    std::vector<Cand> cands;
    for (int p = -5; p <= 5; ++p)
        for (int q = 0; q <= 5; ++q) {
            if (q == 0 && p <= 0) continue;
            if (q == 0 && p != 1) continue;
            if (q > 0 && igcd(std::abs(p), q) != 1) continue;
            Cand c;
            c.v = IVec3(p, q, 0);
            c.norm2 = p * p + q * q;
            c.angle = std::atan2(static_cast<double>(q), static_cast<double>(p));
            cands.push_back(c);
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.norm2 != b.norm2) return a.norm2 < b.norm2;
        return a.angle < b.angle;
    });
    int take = std::min<int>(std::max(target_lines, 2), static_cast<int>(cands.size()));
    DirSet d;
    for (int i = 0; i < take; ++i) d.lines.push_back(cands[i].v);
    auto find_line = [&](const IVec3& v) {
        for (size_t i = 0; i < d.lines.size(); ++i)
            if (d.lines[i] == v || d.lines[i] == IVec3(-v(0), -v(1), 0)) return static_cast<int>(i);
        return -1;
    };
    for (size_t i = 0; i < d.lines.size(); ++i) {
        const IVec3& v = d.lines[i];
        IVec3 perp(-v(1), v(0), 0);
        int j = find_line(perp);
        if (j >= 0 && j != static_cast<int>(i)) {
            int a = std::min<int>(i, j), b = std::max<int>(i, j);
            bool dup = false;
            for (const auto& f : d.frames) dup = dup || (f[0] == a && f[1] == b);
            if (!dup) d.frames.push_back({a, b});
        }
    }
    // drop lines not present in any complete frame
    std::vector<bool> used(d.lines.size(), false);
    for (const auto& f : d.frames)
        for (int l : f) used[l] = true;
    std::vector<int> remap(d.lines.size(), -1);
    DirSet out;
    for (size_t i = 0; i < d.lines.size(); ++i)
        if (used[i]) {
            remap[i] = static_cast<int>(out.lines.size());
            out.lines.push_back(d.lines[i]);
        }
    for (auto f : d.frames) {
        for (int& l : f) l = remap[l];
        out.frames.push_back(f);
    }
    for (const auto& v : out.lines) out.len.push_back(std::sqrt(double(v.squaredNorm())));
    out.id = "widestencil-2d-L" + std::to_string(out.lines.size()) + "-F" +
             std::to_string(out.frames.size());
    return out;
}

DirSet dirset_3d(int target_lines) {
    // orthogonal integer frames: the axis frame, 45-degree rotations about each
    // axis, and four body-diagonal frames
    std::vector<std::array<IVec3, 3>> frames = {
        {IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(0, 0, 1)},
        {IVec3(1, 1, 0), IVec3(1, -1, 0), IVec3(0, 0, 1)},
        {IVec3(1, 0, 1), IVec3(1, 0, -1), IVec3(0, 1, 0)},
        {IVec3(0, 1, 1), IVec3(0, 1, -1), IVec3(1, 0, 0)},
        {IVec3(1, 1, 1), IVec3(1, -1, 0), IVec3(1, 1, -2)},
        {IVec3(1, 1, -1), IVec3(1, -1, 0), IVec3(1, 1, 2)},
        {IVec3(1, -1, 1), IVec3(1, 1, 0), IVec3(1, -1, -2)},
        {IVec3(-1, 1, 1), IVec3(1, 1, 0), IVec3(-1, 1, -2)},
    };
    int nf = 8;
    if (target_lines <= 3) nf = 1;
    else if (target_lines <= 9) nf = 4;
    DirSet d;
    auto add_line = [&](const IVec3& v) {
        for (size_t i = 0; i < d.lines.size(); ++i)
            if (d.lines[i] == v || d.lines[i] == IVec3(-v)) return static_cast<int>(i);
        d.lines.push_back(v);
        return static_cast<int>(d.lines.size()) - 1;
    };
    for (int f = 0; f < nf; ++f)
        d.frames.push_back(
            {add_line(frames[f][0]), add_line(frames[f][1]), add_line(frames[f][2])});
    for (const auto& v : d.lines) d.len.push_back(std::sqrt(double(v.squaredNorm())));
    d.id = "widestencil-3d-L" + std::to_string(d.lines.size()) + "-F" +
           std::to_string(d.frames.size());
    return d;
}

constexpr std::uint8_t EXT = 0, INT = 1, BND = 2;

struct Stencil {
    DirSet dirs;
    std::vector<std::int64_t> unknown_node;  // unknown -> node
    std::vector<std::int32_t> unknown_of;    // node -> unknown or -1
    // per (unknown, line, sign): neighbor node (or -1) with arm length / boundary value
    std::vector<std::int64_t> nb;
    std::vector<double> arm;
    std::vector<double> bval;
    std::vector<double> frhs;

    int nd() const { return static_cast<int>(dirs.lines.size()); }
    std::size_t slot(int k, int d, int s) const {
        return (static_cast<std::size_t>(k) * nd() + d) * 2 + s;
    }
};

struct BoundarySample {
    Vec x;
    double phi;
};

struct Workspace {
    std::vector<double> delta;
};

/// Normalized second difference along line d at unknown k.
inline double second_diff(const Stencil& st, const std::vector<double>& vals, int k, int d,
                          double u0) {
    std::size_t sp = st.slot(k, d, 0), sm = st.slot(k, d, 1);
    double a = st.arm[sp], b = st.arm[sm];
    double up = st.nb[sp] >= 0 ? vals[st.nb[sp]] : st.bval[sp];
    double um = st.nb[sm] >= 0 ? vals[st.nb[sm]] : st.bval[sm];
    return 2.0 * (up / (a * (a + b)) + um / (b * (a + b)) - u0 / (a * b));
}

/// Scheme value at one unknown in n-th-root form:
/// min over frames of (prod max(delta,0))^{1/n} + sum(min(delta,0)).
/// The root keeps the operator concave in u, which is what makes the damped
/// Newton iteration dependable from the convex-envelope start.
double scheme_value(const Stencil& st, const std::vector<double>& vals, int k, Workspace& ws,
                    int* argmin_frame) {
    int nd = st.nd();
    ws.delta.resize(nd);
    double u0 = vals[st.unknown_node[k]];
    for (int d = 0; d < nd; ++d) ws.delta[d] = second_diff(st, vals, k, d, u0);
    double best = std::numeric_limits<double>::infinity();
    int bestf = 0;
    double inv_n = 1.0 / static_cast<double>(st.dirs.frames.empty() ? 1
                                                                    : st.dirs.frames[0].size());
    for (size_t f = 0; f < st.dirs.frames.size(); ++f) {
        double prod = 1.0, smin = 0.0;
        for (int d : st.dirs.frames[f]) {
            prod *= std::max(ws.delta[d], 0.0);
            smin += std::min(ws.delta[d], 0.0);
        }
        double v = std::pow(prod, inv_n) + smin;
        if (v < best) {
            best = v;
            bestf = static_cast<int>(f);
        }
    }
    if (argmin_frame) *argmin_frame = bestf;
    return best;
}

/// d(scheme)/d(delta_d) for the active frame, using the active max/min branches.
void branch_weights(const Stencil& st, const Workspace& ws, int frame, std::vector<double>& w) {
    w.assign(st.nd(), 0.0);
    const auto& fr = st.dirs.frames[frame];
    double inv_n = 1.0 / static_cast<double>(fr.size());
    double prod = 1.0;
    for (int d : fr) prod *= std::max(ws.delta[d], 0.0);
    double root = std::pow(prod, inv_n);
    for (int d : fr) {
        if (ws.delta[d] > 0) {
            // d/d(delta) of prod^{1/n} = prod^{1/n} / (n * delta); the clamp keeps the
            // weight finite when a factor is about to cross zero
            w[d] = prod > 0 ? inv_n * root / std::max(ws.delta[d], 1e-8) : 0.0;
        } else {
            w[d] = 1.0;
        }
    }
}

struct CoreProblem {
    const ImplicitDomain* dom;
    std::function<double(const Vec&)> f;
    std::function<double(const Vec&, int)> phi;
};

struct GridDef {
    int dim;
    double h;
    Vec origin;
    std::array<int, 3> shape;
};

GridDef make_grid(const ImplicitDomain& dom, double h) {
    GridDef g;
    g.dim = dom.dim;
    g.h = h;
    g.origin = dom.lo;
    g.shape = {1, 1, 1};
    for (int a = 0; a < dom.dim; ++a) {
        double ext = dom.hi(a) - dom.lo(a);
        int cells = static_cast<int>(std::ceil(ext / h - 1e-9));
        g.shape[a] = cells + 1;
    }
    return g;
}

Vec grid_point(const GridDef& g, int i, int j, int k) {
    Vec x = g.origin;
    x(0) += g.h * i;
    if (g.dim > 1) x(1) += g.h * j;
    if (g.dim > 2) x(2) += g.h * k;
    return x;
}

/// Max of affine minorants of the boundary data: a convex lower bound used as the
/// deterministic Newton initialization.
void envelope_init(const GridDef& g, const std::vector<std::uint8_t>& state,
                   const std::vector<BoundarySample>& samples, std::vector<double>& vals) {
    if (samples.empty()) return;
    double fmin = samples[0].phi, fmax = samples[0].phi;
    for (const auto& s : samples) {
        fmin = std::min(fmin, s.phi);
        fmax = std::max(fmax, s.phi);
    }
    double diam = 0.0;
    for (int a = 0; a < g.dim; ++a) diam += std::pow(g.h * (g.shape[a] - 1), 2);
    diam = std::sqrt(std::max(diam, 1e-30));
    double L = 4.0 * (fmax - fmin) / diam + 1.0;

    std::vector<Vec> dirs;
    if (g.dim == 2) {
        for (int a = 0; a < 64; ++a) {
            double th = 2 * M_PI * a / 64;
            dirs.push_back(vec2(std::cos(th), std::sin(th)));
        }
    } else {
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j)
                for (int k = -1; k <= 1; ++k) {
                    if (i == 0 && j == 0 && k == 0) continue;
                    dirs.push_back(vec3(i, j, k).normalized());
                }
    }
    std::vector<Vec> slopes;
    slopes.push_back(Vec::Zero(g.dim));
    for (const auto& u : dirs)
        for (int r = 1; r <= 6; ++r) slopes.push_back(u * (L * r / 6.0));

    std::vector<double> offs(slopes.size());
    for (size_t p = 0; p < slopes.size(); ++p) {
        double c = std::numeric_limits<double>::infinity();
        for (const auto& s : samples) c = std::min(c, s.phi - slopes[p].dot(s.x));
        offs[p] = c;
    }
    for (int k = 0; k < g.shape[2]; ++k)
        for (int j = 0; j < g.shape[1]; ++j)
            for (int i = 0; i < g.shape[0]; ++i) {
                std::int64_t id = (static_cast<std::int64_t>(k) * g.shape[1] + j) * g.shape[0] + i;
                if (state[id] != INT) continue;
                Vec x = grid_point(g, i, j, k);
                double v = -std::numeric_limits<double>::infinity();
                for (size_t p = 0; p < slopes.size(); ++p)
                    v = std::max(v, slopes[p].dot(x) + offs[p]);
                vals[id] = v;
            }
}

struct BuiltProblem {
    GridDef grid;
    std::vector<std::uint8_t> state;
    std::vector<double> vals;
    Stencil st;
    std::vector<BoundarySample> samples;
};

BuiltProblem build_problem(const CoreProblem& prob, const SolverParams& prm) {
    BuiltProblem B;
    const ImplicitDomain& dom = *prob.dom;
    B.grid = make_grid(dom, prm.h);
    const GridDef& g = B.grid;
    std::int64_t total = static_cast<std::int64_t>(g.shape[0]) * g.shape[1] * g.shape[2];
    B.state.assign(total, EXT);
    B.vals.assign(total, 0.0);
    double eps = 1e-9 * std::max(1.0, dom.hi.lpNorm<Eigen::Infinity>());

    B.st.dirs = g.dim == 2 ? dirset_2d(prm.directions) : dirset_3d(prm.directions);
    B.st.unknown_of.assign(total, -1);

    for (int k = 0; k < g.shape[2]; ++k)
        for (int j = 0; j < g.shape[1]; ++j)
            for (int i = 0; i < g.shape[0]; ++i) {
                std::int64_t id = (static_cast<std::int64_t>(k) * g.shape[1] + j) * g.shape[0] + i;
                Vec x = grid_point(g, i, j, k);
                double m = dom.margin(x);
                if (m > eps) {
                    B.state[id] = INT;
                    B.st.unknown_of[id] = static_cast<std::int32_t>(B.st.unknown_node.size());
                    B.st.unknown_node.push_back(id);
                } else if (m >= -eps) {
                    B.state[id] = BND;
                    int lbl = 0;
                    double worst = std::numeric_limits<double>::infinity();
                    for (const auto& c : dom.constraints) {
                        double cm = c.margin(x);
                        if (cm < worst) {
                            worst = cm;
                            lbl = c.label;
                        }
                    }
                    B.vals[id] = prob.phi(x, lbl);
                    B.samples.push_back({x, B.vals[id]});
                }
            }

    int ni = static_cast<int>(B.st.unknown_node.size());
    if (ni == 0) fail("DegenerateInput", "no interior grid nodes at this resolution");
    int nd = B.st.nd();
    B.st.nb.assign(static_cast<std::size_t>(ni) * nd * 2, -1);
    B.st.arm.assign(static_cast<std::size_t>(ni) * nd * 2, 0.0);
    B.st.bval.assign(static_cast<std::size_t>(ni) * nd * 2, 0.0);
    B.st.frhs.resize(ni);

    auto node_of = [&](int i, int j, int k) -> std::int64_t {
        if (i < 0 || j < 0 || k < 0 || i >= g.shape[0] || j >= g.shape[1] || k >= g.shape[2])
            return -1;
        return (static_cast<std::int64_t>(k) * g.shape[1] + j) * g.shape[0] + i;
    };

    for (int u = 0; u < ni; ++u) {
        std::int64_t id = B.st.unknown_node[u];
        int i = static_cast<int>(id % g.shape[0]);
        int j = static_cast<int>((id / g.shape[0]) % g.shape[1]);
        int k = static_cast<int>(id / (static_cast<std::int64_t>(g.shape[0]) * g.shape[1]));
        Vec x = grid_point(g, i, j, k);
        B.st.frhs[u] = prob.f(x);
        if (!(B.st.frhs[u] > 0))
            fail("InconsistentInput", "right-hand side must be positive on the domain");
        for (int d = 0; d < nd; ++d) {
            const IVec3& v = B.st.dirs.lines[d];
            for (int s = 0; s < 2; ++s) {
                int sg = s == 0 ? 1 : -1;
                std::int64_t nbid = node_of(i + sg * v(0), j + sg * v(1), k + sg * v(2));
                std::size_t sl = B.st.slot(u, d, s);
                double full = g.h * B.st.dirs.len[d];
                if (nbid >= 0 && B.state[nbid] != EXT) {
                    B.st.nb[sl] = nbid;
                    B.st.arm[sl] = full;
                } else {
                    Vec dx = Vec::Zero(g.dim);
                    for (int a = 0; a < g.dim; ++a) dx(a) = sg * v(a) * g.h;
                    auto cut = dom.exit_cut(x, dx);
                    if (!cut) fail("InconsistentInput", "stencil arm failed to reach the boundary");
                    // grazing cuts are floored: the Dirichlet value is taken at the floored
                    // point, which keeps the stencil exact on quadratics while bounding the
                    // stiffness ratio of the row
                    double t = std::max(cut->t, 0.1);
                    Vec y = x + t * dx;
                    B.st.nb[sl] = -1;
                    B.st.arm[sl] = t * full;
                    B.st.bval[sl] = prob.phi(y, dom.constraints[cut->constraint].label);
                    if (B.samples.size() < 60000) B.samples.push_back({y, B.st.bval[sl]});
                }
            }
        }
    }
    return B;
}

struct LinearSolveResult {
    Vec du;
    bool ok = false;
};

LinearSolveResult solve_linear(const SpMat& J, const Vec& rhs, int ni, int dim) {
    LinearSolveResult out;
    if (dim == 2 || ni <= 40000) {
        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(J);
        lu.factorize(J);
        if (lu.info() == Eigen::Success) {
            out.du = lu.solve(rhs);
            out.ok = true;
            return out;
        }
    }
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> bicg;
    bicg.preconditioner().setDroptol(1e-4);
    bicg.preconditioner().setFillfactor(30);
    bicg.setTolerance(1e-10);
    bicg.setMaxIterations(800);
    bicg.compute(J);
    out.du = bicg.solve(rhs);
    out.ok = bicg.info() == Eigen::Success;
    if (!out.ok) {
        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(J);
        lu.factorize(J);
        if (lu.info() == Eigen::Success) {
            out.du = lu.solve(rhs);
            out.ok = true;
        }
    }
    return out;
}

DiscreteSolution solve_core(const CoreProblem& prob, const SolverParams& prm,
                            const std::vector<double>* warm_start) {
    BuiltProblem B = build_problem(prob, prm);
    Stencil& st = B.st;
    int ni = static_cast<int>(st.unknown_node.size());
    int nd = st.nd();

    if (warm_start && warm_start->size() == B.vals.size()) {
        for (int u = 0; u < ni; ++u)
            B.vals[st.unknown_node[u]] = (*warm_start)[st.unknown_node[u]];
    } else {
        envelope_init(B.grid, B.state, B.samples, B.vals);
    }

    Workspace ws;
    std::vector<double> w;
    Vec res(ni), res_try(ni);
    // the nonlinear iteration runs on the n-th-root form; scale the tolerance so the
    // reported product-form residual meets newton_tol
    double inv_n = 1.0 / B.grid.dim;
    std::vector<double> froot(ni);
    double fmax = 0;
    for (int u = 0; u < ni; ++u) {
        froot[u] = std::pow(st.frhs[u], inv_n);
        fmax = std::max(fmax, st.frhs[u]);
    }
    double root_tol =
        prm.newton_tol / (B.grid.dim * std::pow(std::max(1.0, fmax), 1.0 - inv_n)) * 0.5;
    auto residual = [&](const std::vector<double>& vals, Vec& r) {
        double worst = 0;
        for (int u = 0; u < ni; ++u) {
            r(u) = scheme_value(st, vals, u, ws, nullptr) - froot[u];
            worst = std::max(worst, std::abs(r(u)));
        }
        return worst;
    };
    // product-form residual |det_h - f| for reporting and the final acceptance
    auto product_residual = [&](const std::vector<double>& vals) {
        double worst = 0;
        for (int u = 0; u < ni; ++u) {
            double root = scheme_value(st, vals, u, ws, nullptr);
            double prod = root >= 0 ? std::pow(root, B.grid.dim)
                                    : root;  // negative part enters linearly
            worst = std::max(worst, std::abs(prod - st.frhs[u]));
        }
        return worst;
    };

    double rnorm = residual(B.vals, res);
    int iters = 0;
    double data_range = 1.0;
    for (const auto& s : B.samples) data_range = std::max(data_range, std::abs(s.phi));
    std::vector<double> trial = B.vals;

    for (int round = 0; round < prm.max_rounds && rnorm > root_tol; ++round) {
        bool newton_progress = true;
        int newton_iters = 0;
        while (rnorm > root_tol && newton_iters < prm.newton_max_iter && newton_progress) {
            ++newton_iters;
            ++iters;
            std::vector<Triplet> trip;
            trip.reserve(static_cast<std::size_t>(ni) * (2 * nd + 1));
            for (int u = 0; u < ni; ++u) {
                int fr;
                scheme_value(st, B.vals, u, ws, &fr);
                branch_weights(st, ws, fr, w);
                double diag = 0;
                for (int d : st.dirs.frames[fr]) {
                    std::size_t sp = st.slot(u, d, 0), sm = st.slot(u, d, 1);
                    double a = st.arm[sp], b = st.arm[sm];
                    diag += w[d] * (-2.0 / (a * b));
                    if (st.nb[sp] >= 0) {
                        int un = st.unknown_of[st.nb[sp]];
                        if (un >= 0) trip.emplace_back(u, un, w[d] * 2.0 / (a * (a + b)));
                    }
                    if (st.nb[sm] >= 0) {
                        int un = st.unknown_of[st.nb[sm]];
                        if (un >= 0) trip.emplace_back(u, un, w[d] * 2.0 / (b * (a + b)));
                    }
                }
                trip.emplace_back(u, u, diag - 1e-14);
            }
            SpMat J(ni, ni);
            J.setFromTriplets(trip.begin(), trip.end());
            auto lin = solve_linear(J, Vec(-res), ni, B.grid.dim);
            if (!lin.ok) {
                newton_progress = false;
                break;
            }
            double alpha = std::min(1.0, 20.0 * data_range / (lin.du.lpNorm<Eigen::Infinity>() + 1e-300));
            bool accepted = false;
            for (int halve = 0; halve <= prm.max_damping; ++halve) {
                for (int u = 0; u < ni; ++u)
                    trial[st.unknown_node[u]] = B.vals[st.unknown_node[u]] + alpha * lin.du(u);
                double rtry = residual(trial, res_try);
                if (prm.verbose && halve == 0)
                    std::fprintf(stderr, "  newton %d: rnorm=%.3e full-step rtry=%.3e |du|=%.3e\n",
                                 iters, rnorm, rtry, lin.du.lpNorm<Eigen::Infinity>());
                if (rtry < rnorm || rtry < root_tol) {
                    B.vals.swap(trial);
                    res.swap(res_try);
                    rnorm = rtry;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) newton_progress = false;
        }
        if (rnorm <= root_tol) break;

        // pseudo-time fallback: local explicit steps on u_t = F[u] - f
        for (int sweep = 0; sweep < prm.pseudo_time_sweeps; ++sweep) {
            for (int u = 0; u < ni; ++u) {
                int fr;
                double val = scheme_value(st, B.vals, u, ws, &fr);
                branch_weights(st, ws, fr, w);
                double diag = 0;
                for (int d : st.dirs.frames[fr]) {
                    std::size_t sp = st.slot(u, d, 0), sm = st.slot(u, d, 1);
                    diag += w[d] * 2.0 / (st.arm[sp] * st.arm[sm]);
                }
                if (diag > 0) B.vals[st.unknown_node[u]] += 0.9 * (val - froot[u]) / diag;
            }
            ++iters;
        }
        rnorm = residual(B.vals, res);
    }

    double prod_res = product_residual(B.vals);
    if (rnorm > root_tol || prod_res > prm.newton_tol)
        fail("NewtonDiverged", "nonlinear solve stalled at residual " + std::to_string(prod_res));

    DiscreteSolution sol;
    sol.dim = B.grid.dim;
    sol.h = B.grid.h;
    sol.origin = B.grid.origin;
    sol.shape = B.grid.shape;
    sol.state = std::move(B.state);
    sol.values = std::move(B.vals);
    sol.iterations = iters;
    sol.residual = prod_res;
    sol.monotone_scheme_id = st.dirs.id;
    sol.interior_count = ni;

    // discrete-convexity audit over all stencil lines
    double tau = prm.conv_tol_factor * prm.h * prm.h;
    double worst = std::numeric_limits<double>::infinity();
    int violations = 0;
    for (int u = 0; u < ni; ++u) {
        double u0 = sol.values[st.unknown_node[u]];
        for (int d = 0; d < nd; ++d) {
            double sd = second_diff(st, sol.values, u, d, u0);
            worst = std::min(worst, sd);
            if (sd < -tau) ++violations;
        }
    }
    sol.min_second_difference = worst;
    sol.convexity_violations = violations;
    return sol;
}

}  // namespace

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.eval = [c](const Vec&) { return c; };
    f.inf_bound = c;
    f.sup_bound = c;
    return f;
}

ScalarField ScalarField::from(std::function<double(const Vec&)> fn) {
    ScalarField f;
    f.eval = std::move(fn);
    return f;
}

double DomainConstraint::margin(const Vec& x) const {
    if (kind == HalfspaceK) return hs.margin(x);
    double r2 = 0;
    for (int a : ball_coords) r2 += x(a) * x(a);
    return ball_radius - std::sqrt(r2);
}

double ImplicitDomain::margin(const Vec& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : constraints) m = std::min(m, c.margin(x));
    return m;
}

std::optional<ImplicitDomain::Cut> ImplicitDomain::exit_cut(const Vec& x, const Vec& dx) const {
    double best = std::numeric_limits<double>::infinity();
    int which = -1;
    for (size_t c = 0; c < constraints.size(); ++c) {
        const auto& con = constraints[c];
        if (con.kind == DomainConstraint::HalfspaceK) {
            double denom = con.hs.normal.dot(dx);
            if (denom >= -1e-300) continue;  // moving away from or parallel to the wall
            double t = con.hs.margin(x) / -denom;
            if (t >= -1e-12 && t < best) {
                best = t;
                which = static_cast<int>(c);
            }
        } else {
            double p2 = 0, pd = 0, d2 = 0;
            for (int a : con.ball_coords) {
                p2 += x(a) * x(a);
                pd += x(a) * dx(a);
                d2 += dx(a) * dx(a);
            }
            if (d2 < 1e-300) continue;
            double R2 = con.ball_radius * con.ball_radius;
            double disc = pd * pd - d2 * (p2 - R2);
            if (disc < 0) continue;
            double t = (-pd + std::sqrt(disc)) / d2;
            if (t >= -1e-12 && t < best) {
                best = t;
                which = static_cast<int>(c);
            }
        }
    }
    if (which < 0 || best > 1.0 + 1e-9) return std::nullopt;
    Cut cut;
    cut.t = std::clamp(best, 0.0, 1.0);
    cut.constraint = which;
    return cut;
}

ComputationalDomain ComputationalDomain::polygon(const Polytope& P) {
    if (P.dim != 2) fail("InconsistentInput", "polygon domain must be two-dimensional");
    ComputationalDomain d;
    d.kind = Kind::polygon2d;
    d.dim = 2;
    d.shape.dim = 2;
    for (const auto& hs : P.facets) {
        DomainConstraint c;
        c.kind = DomainConstraint::HalfspaceK;
        c.hs = hs;
        d.shape.constraints.push_back(c);
    }
    d.shape.lo = P.vertices[0];
    d.shape.hi = P.vertices[0];
    for (const auto& v : P.vertices) {
        d.shape.lo = d.shape.lo.cwiseMin(v);
        d.shape.hi = d.shape.hi.cwiseMax(v);
    }
    return d;
}

ComputationalDomain ComputationalDomain::box(const Vec& lo, const Vec& hi) {
    int n = static_cast<int>(lo.size());
    ComputationalDomain d;
    d.kind = n == 3 ? Kind::box3d : Kind::polygon2d;
    d.dim = n;
    d.shape.dim = n;
    for (int a = 0; a < n; ++a) {
        Vec e = Vec::Zero(n);
        e(a) = 1;
        DomainConstraint c1;
        c1.hs = {e, lo(a)};
        d.shape.constraints.push_back(c1);
        DomainConstraint c2;
        c2.hs = {-e, -hi(a)};
        d.shape.constraints.push_back(c2);
    }
    d.shape.lo = lo;
    d.shape.hi = hi;
    return d;
}

ComputationalDomain ComputationalDomain::wedge(double mu, double radius, double z0, double z1) {
    if (!(mu > 0 && mu < 1)) fail("MuOutOfRange", "wedge opening fraction must be in (0,1)");
    ComputationalDomain d;
    d.kind = Kind::wedge3d;
    d.dim = 3;
    d.shape.dim = 3;
    TangentCone cone = wedge_cone(mu, 3);
    for (const auto& nu : cone.inward_normals) {
        DomainConstraint c;
        c.hs = {nu, 0.0};
        c.label = 0;
        d.shape.constraints.push_back(c);
    }
    DomainConstraint zlo, zhi, cyl;
    zlo.hs = {vec3(0, 0, 1), z0};
    zlo.label = 1;
    zhi.hs = {vec3(0, 0, -1), -z1};
    zhi.label = 1;
    cyl.kind = DomainConstraint::BallK;
    cyl.ball_coords = {0, 1};
    cyl.ball_radius = radius;
    cyl.label = 1;
    d.shape.constraints.push_back(zlo);
    d.shape.constraints.push_back(zhi);
    d.shape.constraints.push_back(cyl);
    d.shape.lo = vec3(0, 0, z0);
    double ymax = mu > 0.5 ? radius : radius * std::sin(mu * M_PI);
    d.shape.hi = vec3(radius, ymax, z1);
    return d;
}

ComputationalDomain ComputationalDomain::cone_ball(const TangentCone& cone, double R) {
    int n = cone.dim();
    if (n != 2 && n != 3) fail("InconsistentInput", "cone solves support n = 2, 3");
    ComputationalDomain d;
    d.kind = Kind::truncated_cone;
    d.dim = n;
    d.shape.dim = n;
    for (const auto& nu : cone.inward_normals) {
        DomainConstraint c;
        c.hs = {nu, 0.0};
        c.label = 0;
        d.shape.constraints.push_back(c);
    }
    DomainConstraint ball;
    ball.kind = DomainConstraint::BallK;
    for (int a = 0; a < n; ++a) ball.ball_coords.push_back(a);
    ball.ball_radius = R;
    ball.label = 1;
    d.shape.constraints.push_back(ball);
    d.shape.lo = Vec::Constant(n, -R);
    d.shape.hi = Vec::Constant(n, R);
    return d;
}

DiscreteSolution solve_dirichlet_labeled(const ComputationalDomain& dom, const ScalarField& f,
                                         const std::function<double(const Vec&, int)>& phi,
                                         const SolverParams& prm) {
    CoreProblem prob;
    prob.dom = &dom.shape;
    if (dom.affine_precompose) {
        AffineMap M = *dom.affine_precompose;
        double jac = M.linear.determinant();
        double scale = jac * jac;
        prob.f = [&f, M, scale](const Vec& y) { return scale * f(M.apply(y)); };
        prob.phi = [&phi, M](const Vec& y, int l) { return phi(M.apply(y), l); };
    } else {
        prob.f = [&f](const Vec& y) { return f(y); };
        prob.phi = phi;
    }
    DiscreteSolution sol = solve_core(prob, prm, nullptr);
    sol.affine_precompose = dom.affine_precompose;
    return sol;
}

DiscreteSolution solve_dirichlet(const ComputationalDomain& dom, const ScalarField& f,
                                 const ScalarField& phi, const SolverParams& prm) {
    auto labeled = [&phi](const Vec& x, int) { return phi(x); };
    return solve_dirichlet_labeled(dom, f, labeled, prm);
}

TruncatedConeResult solve_truncated_cone(const TangentCone& cone, double R, double c,
                                         const SolverParams& prm,
                                         const std::optional<PinSpec>& pin) {
    if (!(R > 0) || !(c > 0)) fail("InconsistentInput", "cone solve needs R > 0 and c > 0");
    ComputationalDomain dom = ComputationalDomain::cone_ball(cone, R);
    ScalarField f = ScalarField::constant(c);
    auto lateral_dist = [cone](const Vec& x) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& nu : cone.inward_normals) m = std::min(m, nu.dot(x));
        return std::max(m, 0.0);
    };
    auto phi_with_shift = [lateral_dist](double s) {
        return std::function<double(const Vec&, int)>([s, lateral_dist](const Vec& x, int label) {
            double base = 0.5 * x.squaredNorm();
            return label == 1 ? base + s * lateral_dist(x) : base;
        });
    };

    TruncatedConeResult out;
    if (!pin) {
        out.sol = solve_dirichlet_labeled(dom, f, phi_with_shift(0.0), prm);
        out.shift = 0.0;
        return out;
    }
    if (!(pin->a < 0.5)) fail("PinInfeasible", "pinned value must be below 1/2");

    auto value_at_pin = [&](double s, DiscreteSolution& sol) {
        sol = solve_dirichlet_labeled(dom, f, phi_with_shift(s), prm);
        return sol.value_at(pin->p0);
    };

    DiscreteSolution sol_hi, sol_lo, sol_mid;
    double s_hi = 0.0;
    double v_hi = value_at_pin(s_hi, sol_hi);
    out.outer_solves = 1;
    if (std::abs(v_hi - pin->a) <= pin->tol) {
        out.sol = std::move(sol_hi);
        out.shift = s_hi;
        return out;
    }
    if (v_hi < pin->a) fail("PinInfeasible", "pinned value above the unshifted solution");
    double s_lo = -0.5;
    double v_lo = value_at_pin(s_lo, sol_lo);
    ++out.outer_solves;
    int guard = 0;
    while (v_lo > pin->a && guard++ < 40) {
        s_lo *= 2.0;
        v_lo = value_at_pin(s_lo, sol_lo);
        ++out.outer_solves;
    }
    if (v_lo > pin->a) fail("PinInfeasible", "failed to bracket the pinned value");

    double s_mid = 0.0, v_mid = v_lo;
    for (int it = 0; it < 80; ++it) {
        s_mid = 0.5 * (s_lo + s_hi);
        v_mid = value_at_pin(s_mid, sol_mid);
        ++out.outer_solves;
        if (std::abs(v_mid - pin->a) <= pin->tol) break;
        if (v_mid > pin->a)
            s_hi = s_mid;
        else
            s_lo = s_mid;
    }
    if (std::abs(v_mid - pin->a) > pin->tol)
        fail("PinInfeasible", "bisection failed to meet the pin tolerance");
    out.sol = std::move(sol_mid);
    out.shift = s_mid;
    return out;
}

Vec DiscreteSolution::point(int i, int j, int k) const {
    Vec x = origin;
    x(0) += h * i;
    if (dim > 1) x(1) += h * j;
    if (dim > 2) x(2) += h * k;
    return x;
}

std::array<int, 3> DiscreteSolution::nearest_node(const Vec& x) const {
    std::array<int, 3> out = {0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        int v = static_cast<int>(std::lround((x(a) - origin(a)) / h));
        out[a] = std::clamp(v, 0, shape[a] - 1);
    }
    return out;
}

double DiscreteSolution::value_at(const Vec& x) const {
    std::array<int, 3> base = {0, 0, 0};
    std::array<double, 3> w = {0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        double t = (x(a) - origin(a)) / h;
        int i0 = static_cast<int>(std::floor(t));
        i0 = std::clamp(i0, 0, std::max(shape[a] - 2, 0));
        base[a] = i0;
        w[a] = std::clamp(t - i0, 0.0, 1.0);
    }
    double acc = 0, wsum = 0;
    int corners = 1 << dim;
    for (int cbit = 0; cbit < corners; ++cbit) {
        int ii = base[0] + (cbit & 1);
        int jj = dim > 1 ? base[1] + ((cbit >> 1) & 1) : 0;
        int kk = dim > 2 ? base[2] + ((cbit >> 2) & 1) : 0;
        if (!valid(ii, jj, kk)) continue;
        std::int64_t id = index(ii, jj, kk);
        if (state[id] == 0) continue;
        double ww = ((cbit & 1) ? w[0] : 1 - w[0]);
        if (dim > 1) ww *= ((cbit >> 1) & 1) ? w[1] : 1 - w[1];
        if (dim > 2) ww *= ((cbit >> 2) & 1) ? w[2] : 1 - w[2];
        acc += ww * values[id];
        wsum += ww;
    }
    if (wsum <= 1e-12) fail("OutOfDomain", "interpolation point has no valid cell corners");
    return acc / wsum;
}

namespace {

struct Diff1 {
    double value = 0;
    int order = 0;
};

/// Best available first difference of `get` along `axis` at node (i,j,k).
Diff1 first_diff(const DiscreteSolution& sol, const std::function<double(int, int, int)>& get,
                 const std::function<bool(int, int, int)>& avail, int i, int j, int k, int axis) {
    auto at = [&](int s) {
        return get(i + (axis == 0 ? s : 0), j + (axis == 1 ? s : 0), k + (axis == 2 ? s : 0));
    };
    auto ok = [&](int s) {
        return avail(i + (axis == 0 ? s : 0), j + (axis == 1 ? s : 0), k + (axis == 2 ? s : 0));
    };
    double h = sol.h;
    Diff1 d;
    if (ok(1) && ok(-1)) {
        d.value = (at(1) - at(-1)) / (2 * h);
        d.order = 2;
    } else if (ok(1) && ok(2)) {
        d.value = (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
        d.order = 2;
    } else if (ok(-1) && ok(-2)) {
        d.value = (3 * at(0) - 4 * at(-1) + at(-2)) / (2 * h);
        d.order = 2;
    } else if (ok(1)) {
        d.value = (at(1) - at(0)) / h;
        d.order = 1;
    } else if (ok(-1)) {
        d.value = (at(0) - at(-1)) / h;
        d.order = 1;
    } else {
        fail("OutOfDomain", "no first-difference stencil available at the probe point");
    }
    return d;
}

}  // namespace

ProbeResult hessian_probe(const DiscreteSolution& sol, const Vec& x, int i, int j) {
    if (i < 0 || j < 0 || i >= sol.dim || j >= sol.dim)
        fail("OutOfDomain", "hessian probe indices out of range");
    auto node = sol.nearest_node(x);
    std::int64_t id = sol.index(node[0], node[1], node[2]);
    if (sol.state[id] != 1) fail("OutOfDomain", "hessian probe point is not interior");
    int ni = node[0], nj = node[1], nk = node[2];
    double h = sol.h;

    std::function<bool(int, int, int)> avail = [&](int a, int b, int c) {
        return sol.valid(a, b, c) && sol.state[sol.index(a, b, c)] != 0;
    };
    std::function<double(int, int, int)> val = [&](int a, int b, int c) {
        if (!avail(a, b, c)) fail("OutOfDomain", "probe stencil hits an exterior node");
        return sol.values[sol.index(a, b, c)];
    };

    ProbeResult out;
    if (i == j) {
        int di = i == 0 ? 1 : 0, dj = i == 1 ? 1 : 0, dk = i == 2 ? 1 : 0;
        if (avail(ni + di, nj + dj, nk + dk) && avail(ni - di, nj - dj, nk - dk)) {
            out.value = (val(ni + di, nj + dj, nk + dk) - 2 * val(ni, nj, nk) +
                         val(ni - di, nj - dj, nk - dk)) /
                        (h * h);
            out.order = 2;
            return out;
        }
        int sg = avail(ni + di, nj + dj, nk + dk) ? 1 : -1;
        auto v = [&](int m) {
            return val(ni + sg * m * di, nj + sg * m * dj, nk + sg * m * dk);
        };
        if (avail(ni + sg * 3 * di, nj + sg * 3 * dj, nk + sg * 3 * dk)) {
            out.value = (2 * v(0) - 5 * v(1) + 4 * v(2) - v(3)) / (h * h);
            out.order = 2;
        } else if (avail(ni + sg * 2 * di, nj + sg * 2 * dj, nk + sg * 2 * dk)) {
            out.value = (v(0) - 2 * v(1) + v(2)) / (h * h);
            out.order = 1;
        } else {
            fail("OutOfDomain", "no pure-second stencil available at the probe point");
        }
        return out;
    }

    // mixed derivative: outer difference along axis i of inner differences along axis j
    int order_inner = 2;
    std::function<double(int, int, int)> inner = [&](int a, int b, int c) {
        Diff1 d = first_diff(sol, val, avail, a, b, c, j);
        order_inner = std::min(order_inner, d.order);
        return d.value;
    };
    std::function<bool(int, int, int)> inner_ok = [&](int a, int b, int c) {
        return avail(a, b, c);
    };
    Diff1 outer = first_diff(sol, inner, inner_ok, ni, nj, nk, i);
    out.value = outer.value;
    out.order = std::min(outer.order, order_inner);
    return out;
}

Mat hessian_probe_matrix(const DiscreteSolution& sol, const Vec& x) {
    Mat H(sol.dim, sol.dim);
    for (int a = 0; a < sol.dim; ++a)
        for (int b = a; b < sol.dim; ++b) {
            double v = hessian_probe(sol, x, a, b).value;
            H(a, b) = v;
            H(b, a) = v;
        }
    return H;
}

ResidualReport residual_report(const std::vector<DiscreteSolution>& ladder) {
    if (ladder.empty()) fail("InconsistentInput", "residual report needs at least one solution");
    ResidualReport rep;
    const DiscreteSolution& last = ladder.back();
    rep.max_residual = last.residual;
    rep.convexity_violations = last.convexity_violations;
    auto change = [](const DiscreteSolution& coarse, const DiscreteSolution& fine) {
        double worst = 0;
        for (int k = 0; k < coarse.shape[2]; ++k)
            for (int j = 0; j < coarse.shape[1]; ++j)
                for (int i = 0; i < coarse.shape[0]; ++i) {
                    std::int64_t id = coarse.index(i, j, k);
                    if (coarse.state[id] != 1) continue;
                    Vec x = coarse.point(i, j, k);
                    auto nn = fine.nearest_node(x);
                    if (fine.state[fine.index(nn[0], nn[1], nn[2])] == 0) continue;
                    worst = std::max(worst, std::abs(coarse.values[id] - fine.value_at(x)));
                }
        return worst;
    };
    if (ladder.size() >= 3) {
        double e0 = change(ladder[ladder.size() - 3], ladder[ladder.size() - 2]);
        double e1 = change(ladder[ladder.size() - 2], ladder.back());
        rep.last_change = e1;
        if (e0 > 1e-14 && e1 > 1e-14) rep.grid_convergence_rate = std::log2(e0 / e1);
    } else if (ladder.size() == 2) {
        rep.last_change = change(ladder[0], ladder[1]);
    }
    return rep;
}

void save_solution(const DiscreteSolution& sol, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("InconsistentInput", "cannot open solution file for writing");
    out << "# polyma-solution v1\n";
    out << "# dim=" << sol.dim << " h=" << std::setprecision(17) << sol.h << "\n";
    out << "# origin=";
    for (int a = 0; a < sol.dim; ++a)
        out << (a ? "," : "") << std::setprecision(17) << sol.origin(a);
    out << "\n";
    out << "# shape=" << sol.shape[0] << "," << sol.shape[1] << "," << sol.shape[2] << "\n";
    out << "# scheme=" << sol.monotone_scheme_id << " iterations=" << sol.iterations
        << " residual=" << sol.residual << "\n";
    out << "i,j,k,state,value\n";
    for (int k = 0; k < sol.shape[2]; ++k)
        for (int j = 0; j < sol.shape[1]; ++j)
            for (int i = 0; i < sol.shape[0]; ++i) {
                std::int64_t id = sol.index(i, j, k);
                out << i << "," << j << "," << k << "," << int(sol.state[id]) << ","
                    << std::setprecision(17) << sol.values[id] << "\n";
            }
}

DiscreteSolution load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("InconsistentInput", "cannot open solution file");
    DiscreteSolution sol;
    std::string line;
    auto after = [](const std::string& s, const std::string& key) {
        auto p = s.find(key);
        if (p == std::string::npos) fail("InconsistentInput", "malformed solution header");
        return s.substr(p + key.size());
    };
    std::getline(in, line);
    if (line.rfind("# polyma-solution", 0) != 0)
        fail("InconsistentInput", "not a solution document");
    std::getline(in, line);
    {
        std::istringstream ss(after(line, "dim="));
        ss >> sol.dim;
        std::istringstream sh(after(line, "h="));
        sh >> sol.h;
    }
    std::getline(in, line);
    {
        sol.origin = Vec::Zero(sol.dim);
        std::istringstream ss(after(line, "origin="));
        std::string tok;
        for (int a = 0; a < sol.dim && std::getline(ss, tok, ','); ++a)
            sol.origin(a) = std::stod(tok);
    }
    std::getline(in, line);
    {
        std::istringstream ss(after(line, "shape="));
        char comma;
        ss >> sol.shape[0] >> comma >> sol.shape[1] >> comma >> sol.shape[2];
    }
    std::getline(in, line);  // scheme line
    std::getline(in, line);  // csv header
    std::int64_t total = static_cast<std::int64_t>(sol.shape[0]) * sol.shape[1] * sol.shape[2];
    sol.state.assign(total, 0);
    sol.values.assign(total, 0.0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int i, j, k, st;
        double v;
        char c;
        ss >> i >> c >> j >> c >> k >> c >> st >> c >> v;
        std::int64_t id = sol.index(i, j, k);
        sol.state[id] = static_cast<std::uint8_t>(st);
        sol.values[id] = v;
        if (st == 1) ++sol.interior_count;
    }
    return sol;
}

}  // namespace polyma
