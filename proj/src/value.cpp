// Value iteration on the likelihood-ratio grid: rho_r tables, the fixed point
// rho = min{g, stage + R}, and the continuation functional R with its
// minimizing control.

#include "seqctl/value.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "seqctl/errors.hpp"

namespace seqctl {

namespace {

constexpr double kSnapTol = 1e-10;       // treat near-node queries as exact hits
constexpr double kMonotoneSlack = 1e-10; // iterates must not increase beyond this
constexpr double kControlTieTol = 1e-9;  // controls within this of the min are co-optimal

// Locates q on one axis; false when outside the range (beyond snapping).
inline bool locate(const std::vector<double>& c, bool uniform, double step, double q,
                   int& idx, double& frac) {
    const double lo = c.front(), hi = c.back();
    if (q < lo || q > hi) {
        if (q >= lo - kSnapTol && q < lo) { idx = 0; frac = 0.0; return true; }
        if (q <= hi + kSnapTol && q > hi) {
            idx = static_cast<int>(c.size()) - 2;
            frac = 1.0;
            return true;
        }
        return false;
    }
    int i;
    if (uniform) {
        i = static_cast<int>((q - lo) / step);
        i = std::clamp(i, 0, static_cast<int>(c.size()) - 2);
        if (q < c[i] && i > 0) --i;
        else if (q > c[i + 1] && i + 2 < static_cast<int>(c.size())) ++i;
    } else {
        i = static_cast<int>(std::upper_bound(c.begin(), c.end(), q) - c.begin()) - 1;
        i = std::clamp(i, 0, static_cast<int>(c.size()) - 2);
    }
    const double width = c[i + 1] - c[i];
    double f = (q - c[i]) / width;
    if (std::abs(q - c[i]) <= kSnapTol) f = 0.0;
    else if (std::abs(q - c[i + 1]) <= kSnapTol) f = 1.0;
    idx = i;
    frac = f;
    return true;
}

double g_at_log(const LossSpec& spec, std::span<const double> log_z) {
    double z[3];
    for (std::size_t i = 0; i < log_z.size(); ++i) z[i] = std::exp(log_z[i]);
    return terminal_cost_g(spec, std::span<const double>(z, log_z.size()));
}

// Node data reused across sweeps of one solve.
struct SweepContext {
    const ControlledModel* model;
    const LossSpec* spec;
    std::vector<std::size_t> dims;
    std::vector<double> g;     // terminal cost at every node
    std::vector<double> stage; // stage cost at every node

    SweepContext(const ControlledModel& m, const LossSpec& s, const ValueTable& t)
        : model(&m), spec(&s) {
        for (const auto& axis : t.axes) dims.push_back(axis.size());
        const std::size_t n = t.node_count();
        g.resize(n);
        stage.resize(n);
        std::vector<std::size_t> idx(dims.size(), 0);
        double z[3];
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t d = 0; d < dims.size(); ++d) z[d] = std::exp(t.axes[d][idx[d]]);
            const std::span<const double> zs(z, dims.size());
            g[p] = terminal_cost_g(s, zs);
            stage[p] = stage_cost(s, zs);
            for (int d = static_cast<int>(dims.size()) - 1; d >= 0; --d) {
                if (++idx[static_cast<std::size_t>(d)] < dims[static_cast<std::size_t>(d)]) break;
                idx[static_cast<std::size_t>(d)] = 0;
            }
        }
    }
};

void sweep(const SweepContext& ctx, const ValueTable& prev, std::vector<double>& out) {
    const RhoView rho(prev, *ctx.spec);
    const auto& axes = prev.axes;
    const std::size_t ndims = axes.size();
    const std::size_t n = prev.node_count();
    std::vector<std::size_t> idx(ndims, 0);
    double query[3];
    const int controls = ctx.model->control_count();
    for (std::size_t p = 0; p < n; ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (int x = 0; x < controls; ++x) {
            const H1Kernel& kern = ctx.model->h1_kernel(x);
            double sum = 0.0;
            for (std::size_t e = 0; e < kern.weight.size(); ++e) {
                for (std::size_t d = 0; d < ndims; ++d)
                    query[d] = axes[d][idx[d]] + kern.log_inc[e][d];
                sum += kern.weight[e] * rho(std::span<const double>(query, ndims));
            }
            if (sum < best) best = sum;
        }
        out[p] = std::min(ctx.g[p], ctx.stage[p] + best);
        for (int d = static_cast<int>(ndims) - 1; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < ctx.dims[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
    }
}

} // namespace

GridSpec GridSpec::default_for(int k) {
    if (k < 2) throw ConfigError("grid: need k >= 2");
    if (k > 4)
        throw ConfigError("grid: k > 4 not supported (tensor grid would blow up); "
                          "reduce the hypothesis count");
    GridSpec spec;
    GridAxis axis;
    axis.m = (k == 2) ? 1001 : 201;
    spec.axes.assign(static_cast<std::size_t>(k - 1), axis);
    return spec;
}

std::vector<std::vector<double>> GridSpec::build_axes() const {
    if (axes.empty() || axes.size() > 3)
        throw ConfigError("grid: dimension must be between 1 and 3 (k between 2 and 4)");
    std::vector<std::vector<double>> out;
    out.reserve(axes.size());
    for (const auto& axis : axes) {
        if (!(axis.lo < axis.hi)) throw ConfigError("grid: need lo < hi");
        if (axis.m < 3) throw ConfigError("grid: need at least 3 nodes per axis");
        std::vector<double> coords;
        coords.reserve(static_cast<std::size_t>(axis.m) + axis.extra.size());
        const double h = (axis.hi - axis.lo) / static_cast<double>(axis.m - 1);
        for (int i = 0; i < axis.m; ++i) coords.push_back(axis.lo + h * i);
        coords.back() = axis.hi;
        for (double q : axis.extra) {
            if (q < axis.lo || q > axis.hi)
                throw ConfigError("grid: injected coordinate outside bounds");
            coords.push_back(q);
        }
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end(),
                                 [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                     coords.end());
        out.push_back(std::move(coords));
    }
    return out;
}

void finalize_axes(ValueTable& table) {
    const std::size_t d = table.axes.size();
    table.axis_uniform.assign(d, 1);
    table.axis_step.assign(d, 0.0);
    table.strides.assign(d, 1);
    std::size_t s = 1;
    for (int dim = static_cast<int>(d) - 1; dim >= 0; --dim) {
        table.strides[static_cast<std::size_t>(dim)] = s;
        s *= table.axes[static_cast<std::size_t>(dim)].size();
    }
    for (std::size_t dim = 0; dim < d; ++dim) {
        const auto& axis = table.axes[dim];
        const double h = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
        table.axis_step[dim] = h;
        for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
            if (std::abs((axis[i + 1] - axis[i]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
                table.axis_uniform[dim] = 0;
                break;
            }
        }
    }
}

double RhoView::operator()(std::span<const double> log_z) const {
    const auto& axes = table_->axes;
    const std::size_t d = axes.size();
    int idx[3];
    double frac[3];
    for (std::size_t dim = 0; dim < d; ++dim) {
        if (!locate(axes[dim], table_->axis_uniform[dim] != 0, table_->axis_step[dim],
                    log_z[dim], idx[dim], frac[dim]))
            return g_at_log(*spec_, log_z); // beyond the grid: stopping cost
    }
    double acc = 0.0;
    const unsigned corners = 1u << d;
    for (unsigned c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t dim = 0; dim < d; ++dim) {
            const bool hi = (c >> dim) & 1u;
            w *= hi ? frac[dim] : 1.0 - frac[dim];
            flat += (static_cast<std::size_t>(idx[dim]) + (hi ? 1 : 0)) * table_->strides[dim];
        }
        if (w != 0.0) acc += w * table_->values[flat];
    }
    return acc;
}

ValueTable make_terminal_table(const ControlledModel& model, const LossSpec& spec,
                               const GridSpec& grid) {
    if (spec.k() != model.k()) throw ConfigError("loss and model disagree on k");
    if (static_cast<int>(grid.axes.size()) != model.k() - 1)
        throw ConfigError("grid dimension must be k - 1");
    ValueTable table;
    table.grid = grid;
    table.axes = grid.build_axes();
    std::size_t n = 1;
    for (const auto& axis : table.axes) n *= axis.size();
    table.values.assign(n, 0.0);
    table.fingerprint = make_fingerprint(model, spec);
    finalize_axes(table);

    SweepContext ctx(model, spec, table);
    table.values = ctx.g;
    return table;
}

ValueTable bellman_apply(const ControlledModel& model, const LossSpec& spec,
                         const ValueTable& table) {
    SweepContext ctx(model, spec, table);
    ValueTable next = table;
    next.iterations = table.iterations + 1;
    sweep(ctx, table, next.values);
    double res = 0.0;
    for (std::size_t p = 0; p < table.values.size(); ++p) {
        if (next.values[p] > table.values[p] + kMonotoneSlack)
            throw InternalError("bellman_apply: non-monotone update (quadrature or "
                                "interpolation defect)");
        res = std::max(res, std::abs(next.values[p] - table.values[p]));
    }
    next.residual = res;
    return next;
}

ValueTable truncated_rho(const ControlledModel& model, const LossSpec& spec,
                         const GridSpec& grid, int r) {
    if (r < 0) throw ConfigError("truncated_rho: need r >= 0");
    ValueTable table = make_terminal_table(model, spec, grid);
    if (r == 0) return table;
    SweepContext ctx(model, spec, table);
    std::vector<double> next(table.values.size());
    for (int it = 0; it < r; ++it) {
        sweep(ctx, table, next);
        double res = 0.0;
        for (std::size_t p = 0; p < next.size(); ++p) {
            if (next[p] > table.values[p] + kMonotoneSlack)
                throw InternalError("truncated_rho: non-monotone update");
            res = std::max(res, std::abs(next[p] - table.values[p]));
        }
        table.values.swap(next);
        table.iterations = it + 1;
        table.residual = res;
    }
    return table;
}

ValueTable solve_rho(const ControlledModel& model, const LossSpec& spec,
                     const GridSpec& grid, const SolveOptions& opts) {
    spec.validate();
    ValueTable table = make_terminal_table(model, spec, grid);
    SweepContext ctx(model, spec, table);
    std::vector<double> next(table.values.size());
    table.converged = false;
    for (int it = 1; it <= opts.max_iter; ++it) {
        sweep(ctx, table, next);
        double res = 0.0;
        for (std::size_t p = 0; p < next.size(); ++p) {
            if (next[p] > table.values[p] + kMonotoneSlack)
                throw InternalError("solve_rho: non-monotone iterate at node " +
                                    std::to_string(p));
            res = std::max(res, std::abs(next[p] - table.values[p]));
        }
        table.values.swap(next);
        table.iterations = it;
        table.residual = res;
        if (res < opts.tol) {
            table.converged = true;
            break;
        }
    }
    return table;
}

Continuation continuation(const ControlledModel& model, const LossSpec& spec,
                          const ValueTable& table, std::span<const double> log_z) {
    const RhoView rho(table, spec);
    const std::size_t d = table.axes.size();
    double query[3];
    Continuation best;
    best.value = std::numeric_limits<double>::infinity();
    best.control = 0;
    for (int x = 0; x < model.control_count(); ++x) {
        const H1Kernel& kern = model.h1_kernel(x);
        double sum = 0.0;
        for (std::size_t e = 0; e < kern.weight.size(); ++e) {
            for (std::size_t dim = 0; dim < d; ++dim)
                query[dim] = log_z[dim] + kern.log_inc[e][dim];
            sum += kern.weight[e] * rho(std::span<const double>(query, d));
        }
        if (sum < best.value - kControlTieTol) {
            best.value = sum;
            best.control = x;
        }
    }
    return best;
}

Continuation continuation(const ControlledModel& model, const LossSpec& spec,
                          const ValueTable& table, const LikelihoodState& state) {
    return continuation(model, spec, table, state.log_z);
}

double r0(const ControlledModel& model, const LossSpec& spec, const ValueTable& table) {
    const std::vector<double> ones(static_cast<std::size_t>(model.k() - 1), 0.0);
    return continuation(model, spec, table, ones).value;
}

bool trivial_procedure_optimal(const ControlledModel& model, const LossSpec& spec,
                               const ValueTable& table) {
    const std::vector<double> unit(static_cast<std::size_t>(model.k() - 1), 1.0);
    const double l0 = terminal_cost_g(spec, unit);
    return l0 <= stage_cost(spec, unit) + r0(model, spec, table);
}

std::string make_fingerprint(const ControlledModel& model, const LossSpec& spec) {
    const std::string text = model.config_text() + "|" + canonical_text(spec);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace seqctl
