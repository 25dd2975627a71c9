#include "twistband/band.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace twistband {

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;  // FNV-1a
    }
}

void hash_sparse(std::uint64_t& h, const SparseMat& m) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMat::InnerIterator it(m, k); it; ++it) {
            const int r = static_cast<int>(it.row());
            const double v = it.value();
            hash_bytes(h, &r, sizeof(r));
            hash_bytes(h, &k, sizeof(k));
            hash_bytes(h, &v, sizeof(v));
        }
}

}  // namespace

std::uint64_t matrices_fingerprint(const FiberMatrices& mats) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    hash_sparse(h, mats.M);
    hash_sparse(h, mats.K);
    hash_sparse(h, mats.A);
    hash_sparse(h, mats.D);
    return h;
}

GroundState ground_state(const FiberMatrices& mats, double beta0, double tol) {
    if (!(beta0 >= 0.0))
        throw std::invalid_argument("ground_state: beta0 must be >= 0");
    SparseMat S = mats.K + (beta0 * beta0) * mats.A;
    auto res = solve_lowest(S, mats.M, 1, tol, 0);

    GroundState gs;
    gs.E = res.values[0];
    gs.f = res.vectors.col(0);
    gs.residual = res.residuals[0];
    gs.converged = res.converged;
    // Sign normalization: M-weighted mean positive.
    const double mean = gs.f.dot(mats.M * Eigen::VectorXd::Ones(mats.n()));
    if (mean < 0.0) gs.f = -gs.f;
    gs.norm_sq = gs.f.dot(mats.M * gs.f);
    gs.angular_energy = gs.f.dot(mats.A * gs.f);
    gs.positivity_ok = true;
    for (int i = 0; i < gs.f.size(); ++i)
        if (!(gs.f[i] > 0.0)) {
            gs.positivity_ok = false;
            gs.negative_dofs.push_back(i);
        }
    return gs;
}

std::string positivity_report(const GroundState& gs, const Mesh& mesh) {
    if (gs.positivity_ok) return "all interior nodal values positive";
    std::string out = "non-positive nodal values at:";
    for (int node = 0; node < mesh.n_nodes(); ++node) {
        const int dof = mesh.interior_map[node];
        if (dof < 0) continue;
        for (int bad : gs.negative_dofs)
            if (bad == dof) {
                char buf[80];
                std::snprintf(buf, sizeof(buf), " (%.6g, %.6g)",
                              mesh.nodes[node].x(), mesh.nodes[node].y());
                out += buf;
            }
    }
    return out;
}

std::vector<double> default_p_grid(double beta0, double a, int n_points) {
    if (n_points < 3 || n_points % 2 == 0)
        throw std::invalid_argument("default_p_grid: need an odd count >= 3");
    const double pmax = 5.0 * (1.0 + a * beta0);
    std::vector<double> grid(n_points);
    const int half = n_points / 2;
    for (int j = 0; j < n_points; ++j)
        grid[j] = pmax * static_cast<double>(j - half) / half;
    grid[half] = 0.0;
    return grid;
}

namespace {

void check_grid(const std::vector<double>& p_grid) {
    const int n = static_cast<int>(p_grid.size());
    if (n == 0) throw std::invalid_argument("compute_bands: empty p grid");
    bool has_zero = false;
    for (int j = 0; j + 1 < n; ++j)
        if (!(p_grid[j] < p_grid[j + 1]))
            throw std::invalid_argument("compute_bands: grid not ascending");
    for (int j = 0; j < n; ++j) {
        if (p_grid[j] == 0.0) has_zero = true;
        const double mirror = -p_grid[n - 1 - j];
        if (std::abs(p_grid[j] - mirror) > 1e-12 * (1.0 + std::abs(p_grid[j])))
            throw std::invalid_argument("compute_bands: grid not symmetric");
    }
    if (!has_zero) throw std::invalid_argument("compute_bands: grid must contain 0");
}

}  // namespace

BandData compute_bands(const FiberMatrices& mats, double beta0,
                       const std::vector<double>& p_grid, int n_bands,
                       double tol) {
    check_grid(p_grid);
    if (n_bands < 1) throw std::invalid_argument("compute_bands: n_bands < 1");

    BandData band;
    band.p_grid = p_grid;
    band.beta0 = beta0;
    band.fingerprint = matrices_fingerprint(mats);
    const int np = static_cast<int>(p_grid.size());
    band.bands.setConstant(np, n_bands, std::numeric_limits<double>::quiet_NaN());
    band.converged.assign(np, 0);

    for (int j = 0; j < np; ++j) {
        const double p = p_grid[j];
        try {
            if (p == 0.0 || beta0 == 0.0) {
                auto fm = fiber_matrix(mats, p, beta0);
                auto res = solve_lowest(fm.hermitian_part_real, mats.M, n_bands,
                                        tol, 0);
                for (int nb = 0; nb < n_bands; ++nb)
                    band.bands(j, nb) = res.values[nb];
                band.converged[j] = res.converged ? 1 : 0;
                if (p == 0.0) band.vectors_at_zero = res.vectors;
            } else {
                auto fm = fiber_matrix(mats, p, beta0);
                auto merged = solve_hermitian_fiber(fm, mats.M, n_bands, tol, 0);
                for (int nb = 0; nb < n_bands; ++nb)
                    band.bands(j, nb) = merged.values[nb];
                band.converged[j] = merged.converged ? 1 : 0;
            }
        } catch (const std::exception&) {
            band.converged[j] = 0;  // leave NaN markers in the row
        }
    }
    return band;
}

BandDiagnostics band_diagnostics(const BandData& band, double a) {
    const int np = static_cast<int>(band.p_grid.size());
    const int nb = static_cast<int>(band.bands.cols());
    BandDiagnostics d;

    double max_eps = 0.0;
    for (int j = 0; j < np; ++j)
        for (int n = 0; n < nb; ++n)
            if (std::isfinite(band.bands(j, n)))
                max_eps = std::max(max_eps, std::abs(band.bands(j, n)));

    d.evenness_defect = 0.0;
    for (int j = 0; j < np; ++j)
        for (int n = 0; n < nb; ++n) {
            const double fwd = band.bands(j, n);
            const double bwd = band.bands(np - 1 - j, n);
            if (std::isfinite(fwd) && std::isfinite(bwd))
                d.evenness_defect =
                    std::max(d.evenness_defect, std::abs(fwd - bwd));
        }
    d.evenness_ok = d.evenness_defect <= 1e-8 * std::max(max_eps, 1.0);

    const double denom = 1.0 + a * a * band.beta0 * band.beta0;
    d.lower_bound_margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < np; ++j) {
        const double e1 = band.bands(j, 0);
        if (!std::isfinite(e1)) continue;
        d.lower_bound_margin = std::min(
            d.lower_bound_margin, e1 - band.p_grid[j] * band.p_grid[j] / denom);
    }
    d.lower_bound_ok = d.lower_bound_margin >= -1e-10 * std::max(max_eps, 1.0);

    // Outer-half trend of eps_1 on the positive side (mirrored by evenness).
    d.monotone_tail_ok = true;
    const int start = np - 1 - np / 4;
    for (int j = std::max(start, np / 2); j + 1 < np; ++j)
        if (!(band.bands(j + 1, 0) >=
              band.bands(j, 0) - 1e-10 * std::max(max_eps, 1.0)))
            d.monotone_tail_ok = false;

    d.argmin_index = 0;
    for (int j = 1; j < np; ++j)
        if (band.bands(j, 0) < band.bands(d.argmin_index, 0)) d.argmin_index = j;
    d.argmin_p = band.p_grid[d.argmin_index];
    d.argmin_at_zero = band.p_grid[d.argmin_index] == 0.0;
    return d;
}

std::string BandDiagnostics::to_json() const {
    nlohmann::json j;
    j["evenness_defect"] = evenness_defect;
    j["evenness_ok"] = evenness_ok;
    j["lower_bound_margin"] = lower_bound_margin;
    j["lower_bound_ok"] = lower_bound_ok;
    j["monotone_tail_ok"] = monotone_tail_ok;
    j["argmin_index"] = argmin_index;
    j["argmin_p"] = argmin_p;
    j["argmin_at_zero"] = argmin_at_zero;
    return j.dump(2);
}

std::string bands_to_csv(const BandData& band) {
    std::string out = "p";
    char buf[64];
    for (int n = 0; n < band.bands.cols(); ++n) {
        std::snprintf(buf, sizeof(buf), ",eps_%d", n + 1);
        out += buf;
    }
    out += "\n";
    for (int j = 0; j < static_cast<int>(band.p_grid.size()); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", band.p_grid[j]);
        out += buf;
        for (int n = 0; n < band.bands.cols(); ++n) {
            std::snprintf(buf, sizeof(buf), ",%.17g", band.bands(j, n));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::string ground_state_to_csv(const GroundState& gs, const Mesh& mesh) {
    std::string out = "node_t2,node_t3,f_value\n";
    char buf[128];
    for (int node = 0; node < mesh.n_nodes(); ++node) {
        const int dof = mesh.interior_map[node];
        if (dof < 0) continue;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n",
                      mesh.nodes[node].x(), mesh.nodes[node].y(), gs.f[dof]);
        out += buf;
    }
    return out;
}

}  // namespace twistband
