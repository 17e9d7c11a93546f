#include "compop/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>

#include "compop/error.hpp"
#include "fft.hpp"

namespace compop {

namespace {

using detail::Fft;
using detail::fft_friendly;

// exp(j 2 pi cycles) with the integer part removed first.
Symbol turn(double cycles) {
    const double frac = cycles - std::floor(cycles);
    return std::polar(1.0, 2.0 * kPi * frac);
}

struct Row {
    double y = 0.0;
    std::vector<std::pair<double, int>> xs;  // (x, antenna), ascending, distinct x
    std::vector<double> knots;               // x values of xs
};

std::vector<Row> group_rows(const PointCloud& sv) {
    std::vector<int> order(sv.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sv[a].y < sv[b].y; });
    double max_gap = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i) max_gap = std::max(max_gap, sv[order[i]].y - sv[order[i - 1]].y);
    const double split = std::max(0.5 * max_gap, 1e-9);

    std::vector<std::vector<int>> members(1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && sv[order[i]].y - sv[order[i - 1]].y > split) members.emplace_back();
        members.back().push_back(order[i]);
    }
    if (members.size() < 2) throw Error(ErrorKind::Degenerate, "aperture needs at least two antenna rows");

    std::vector<Row> rows;
    for (auto& group : members) {
        Row row;
        for (int m : group) row.y += sv[m].y;
        row.y /= static_cast<double>(group.size());
        std::stable_sort(group.begin(), group.end(), [&](int a, int b) { return sv[a].x < sv[b].x; });
        for (int m : group)
            if (row.xs.empty() || sv[m].x - row.xs.back().first > 1e-12) row.xs.emplace_back(sv[m].x, m);
        if (row.xs.size() < 2)
            throw Error(ErrorKind::Degenerate, "every aperture row needs at least two distinct X positions");
        for (const auto& entry : row.xs) row.knots.push_back(entry.first);
        rows.push_back(std::move(row));
    }
    return rows;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::vector<double> uniform_axis(double lo, double hi, double target) {
    const int n = static_cast<int>(std::ceil((hi - lo) / target - 1e-9)) + 1;
    std::vector<double> axis(static_cast<std::size_t>(std::max(n, 2)));
    const double step = (hi - lo) / static_cast<double>(axis.size() - 1);
    for (std::size_t i = 0; i < axis.size(); ++i) axis[i] = lo + static_cast<double>(i) * step;
    axis.back() = hi;
    return axis;
}

// Weights of the linear interpolant at x over ascending knots, or empty when
// x is outside [front, back].
struct Bracket {
    int lo = -1;
    double w = 0.0;
};

Bracket bracket(const std::vector<double>& knots, double x, double tol) {
    const std::size_t n = knots.size();
    if (x < knots[0] - tol || x > knots[n - 1] + tol) return {};
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots.begin() - 1, 0));
    i = std::min(i, n - 2);
    const double span = knots[i + 1] - knots[i];
    return {static_cast<int>(i), std::clamp((x - knots[i]) / span, 0.0, 1.0)};
}

// Evaluates b_i = sum_p a_p exp(+j 2 pi (F0 + p dF)(X0 + i v) / c) for the
// voxels of one axis with an FFT; v = c / (N dF) is the realised pitch.
class AxisEval {
public:
    AxisEval(double f0, double df, int bins, double center, double extent, double max_spacing) : bins_(bins) {
        if (!(df > 0.0) || bins < 1) throw Error(ErrorKind::InvalidConfig, "spectral axis must be uniform");
        if (!(extent < kSpeedOfLight / df))
            throw Error(ErrorKind::InvalidConfig, "voxel box is wider than the unambiguous period of the spectrum");
        int n = fft_friendly(static_cast<int>(std::ceil(kSpeedOfLight / (df * max_spacing) - 1e-9)));
        for (;;) {
            pitch_ = kSpeedOfLight / (n * df);
            half_ = static_cast<int>(std::ceil(0.5 * extent / pitch_ - 1e-9));
            if (2 * half_ + 1 <= n) break;
            n = fft_friendly(n + 1);
        }
        n_ = n;
        count_ = 2 * half_ + 1;
        start_ = center - half_ * pitch_;
        pre_.resize(static_cast<std::size_t>(bins));
        for (int p = 0; p < bins; ++p) pre_[static_cast<std::size_t>(p)] = turn(p * df * start_ / kSpeedOfLight);
        post_.resize(static_cast<std::size_t>(count_));
        for (int i = 0; i < count_; ++i)
            post_[static_cast<std::size_t>(i)] = turn(f0 * (start_ + i * pitch_) / kSpeedOfLight);
        fft_ = std::make_unique<Fft>(std::vector<int>{n_}, +1);
    }

    int count() const noexcept { return count_; }
    double pitch() const noexcept { return pitch_; }
    double start() const noexcept { return start_; }

    void apply(const Symbol* in, std::size_t in_stride, Symbol* out, std::size_t out_stride, double scale) {
        bool any = false;
        for (int p = 0; p < bins_ && !any; ++p) any = in[p * in_stride] != Symbol{};
        if (!any) {
            for (int i = 0; i < count_; ++i) out[i * out_stride] = Symbol{};
            return;
        }
        Symbol* buf = fft_->data();
        std::fill(buf, buf + n_, Symbol{});
        for (int p = 0; p < bins_; ++p) buf[p % n_] += in[p * in_stride] * pre_[static_cast<std::size_t>(p)];
        fft_->execute();
        for (int i = 0; i < count_; ++i) out[i * out_stride] = scale * buf[i] * post_[static_cast<std::size_t>(i)];
    }

private:
    int bins_ = 0;
    int n_ = 0;
    int half_ = 0;
    int count_ = 0;
    double pitch_ = 0.0;
    double start_ = 0.0;
    std::vector<Symbol> pre_;
    std::vector<Symbol> post_;
    std::unique_ptr<Fft> fft_;
};

double axis_step(const std::vector<double>& axis) {
    return axis.size() > 1 ? axis[1] - axis[0] : 0.0;
}

}  // namespace

double PowerSpectrum::max_magnitude() const {
    double best = 0.0;
    for (const auto& v : voxels) best = std::max(best, std::abs(v));
    return best;
}

ApertureSamples sample_aperture(const PathObservation& obs, const PointCloud& sv, const FrequencyGrid& grid,
                                double target_spacing) {
    return sample_aperture(obs.sfcw, sv, grid, target_spacing);
}

ApertureSamples sample_aperture(const Eigen::MatrixXcd& symbols, const PointCloud& sv, const FrequencyGrid& grid,
                                double target_spacing) {
    grid.check();
    if (symbols.rows() != static_cast<Eigen::Index>(sv.size()) || symbols.cols() != grid.K)
        throw Error(ErrorKind::InvalidConfig, "SFCW symbols do not match the SV array and tone grid");
    const std::vector<Row> rows = group_rows(sv);

    double x_lo = rows[0].xs.front().first, x_hi = rows[0].xs.back().first;
    std::vector<double> x_steps, y_steps;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        x_lo = std::min(x_lo, rows[r].xs.front().first);
        x_hi = std::max(x_hi, rows[r].xs.back().first);
        for (std::size_t i = 1; i < rows[r].xs.size(); ++i) x_steps.push_back(rows[r].xs[i].first - rows[r].xs[i - 1].first);
        if (r > 0) y_steps.push_back(rows[r].y - rows[r - 1].y);
    }
    const double tx = target_spacing > 0.0 ? target_spacing : median(x_steps);
    const double ty = target_spacing > 0.0 ? target_spacing : median(y_steps);

    ApertureSamples out;
    out.grid = grid;
    out.grid_x = uniform_axis(x_lo, x_hi, tx);
    out.grid_y = uniform_axis(rows.front().y, rows.back().y, ty);
    const std::size_t nx = out.nx(), ny = out.ny();

    // Up to four (antenna, weight) terms per output sample.
    std::vector<double> row_y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) row_y[r] = rows[r].y;
    std::vector<std::vector<std::pair<int, double>>> terms(nx * ny);
    const double tol = 1e-9 * std::max(1.0, x_hi - x_lo);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const Bracket by = bracket(row_y, out.grid_y[iy], tol);
        if (by.lo < 0) continue;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            std::vector<std::pair<int, double>> cell;
            bool inside = true;
            for (int side = 0; side < 2 && inside; ++side) {
                const double wy = side == 0 ? 1.0 - by.w : by.w;
                const Row& row = rows[static_cast<std::size_t>(by.lo + side)];
                const Bracket bx = bracket(row.knots, out.grid_x[ix], tol);
                if (bx.lo < 0) {
                    inside = wy == 0.0;
                    continue;
                }
                if (wy == 0.0) continue;
                cell.emplace_back(row.xs[static_cast<std::size_t>(bx.lo)].second, wy * (1.0 - bx.w));
                cell.emplace_back(row.xs[static_cast<std::size_t>(bx.lo + 1)].second, wy * bx.w);
            }
            if (inside) terms[iy * nx + ix] = std::move(cell);
        }
    }

    out.samples.assign(nx * ny * static_cast<std::size_t>(grid.K), Symbol{});
    std::vector<Symbol> projected(sv.size());
    for (int k = 0; k < grid.K; ++k) {
        const double f = grid.freq(k);
        for (std::size_t m = 0; m < sv.size(); ++m)
            projected[m] = symbols(static_cast<Eigen::Index>(m), k) * turn(-f * sv[m].z / kSpeedOfLight);
        for (std::size_t c = 0; c < terms.size(); ++c) {
            Symbol acc{};
            for (const auto& [m, w] : terms[c])
                if (w != 0.0) acc += w * projected[static_cast<std::size_t>(m)];
            out.samples[static_cast<std::size_t>(k) * nx * ny + c] = acc;
        }
    }
    return out;
}

Spectrum2D forward_2d_spectrum(const ApertureSamples& s, double min_period) {
    if (s.nx() < 2 || s.ny() < 2) throw Error(ErrorKind::Degenerate, "aperture grid needs at least 2x2 samples");
    const double dx = s.dx(), dy = s.dy();
    const int nx = fft_friendly(std::max({static_cast<int>(s.nx()), 2, static_cast<int>(std::ceil(min_period / dx - 1e-9))}));
    const int ny = fft_friendly(std::max({static_cast<int>(s.ny()), 2, static_cast<int>(std::ceil(min_period / dy - 1e-9))}));

    Spectrum2D out;
    out.grid = s.grid;
    out.fx.resize(static_cast<std::size_t>(nx));
    out.fy.resize(static_cast<std::size_t>(ny));
    const double dfx = kSpeedOfLight / (nx * dx), dfy = kSpeedOfLight / (ny * dy);
    for (int p = 0; p < nx; ++p) out.fx[static_cast<std::size_t>(p)] = (p - nx / 2) * dfx;
    for (int q = 0; q < ny; ++q) out.fy[static_cast<std::size_t>(q)] = (q - ny / 2) * dfy;

    std::vector<Symbol> tx(static_cast<std::size_t>(nx)), ty(static_cast<std::size_t>(ny));
    for (int p = 0; p < nx; ++p) tx[static_cast<std::size_t>(p)] = turn(-out.fx[static_cast<std::size_t>(p)] * s.grid_x[0] / kSpeedOfLight);
    for (int q = 0; q < ny; ++q) ty[static_cast<std::size_t>(q)] = turn(-out.fy[static_cast<std::size_t>(q)] * s.grid_y[0] / kSpeedOfLight);

    Fft fft({ny, nx}, -1);
    Symbol* buf = fft.data();
    out.values.assign(static_cast<std::size_t>(nx) * ny * s.grid.K, Symbol{});
    for (int k = 0; k < s.grid.K; ++k) {
        std::fill(buf, buf + fft.size(), Symbol{});
        for (std::size_t iy = 0; iy < s.ny(); ++iy)
            for (std::size_t ix = 0; ix < s.nx(); ++ix) buf[iy * static_cast<std::size_t>(nx) + ix] = s.at(ix, iy, k);
        fft.execute();
        for (int q = 0; q < ny; ++q) {
            const int qq = ((q - ny / 2) % ny + ny) % ny;
            for (int p = 0; p < nx; ++p) {
                const int pp = ((p - nx / 2) % nx + nx) % nx;
                out.values[out.index(static_cast<std::size_t>(p), static_cast<std::size_t>(q), k)] =
                    buf[static_cast<std::size_t>(qq) * nx + pp] * tx[static_cast<std::size_t>(p)] * ty[static_cast<std::size_t>(q)];
            }
        }
    }
    return out;
}

FzAxis default_fz_axis(const Spectrum2D& s, double box_extent_z) {
    if (!(box_extent_z > 0.0)) throw Error(ErrorKind::InvalidConfig, "box depth must be positive");
    double rho2 = 0.0;
    const auto sq_max = [](const std::vector<double>& a) {
        double m = 0.0;
        for (double v : a) m = std::max(m, v * v);
        return m;
    };
    rho2 = sq_max(s.fx) + sq_max(s.fy);
    const double lo = std::sqrt(std::max(s.grid.f1 * s.grid.f1 - rho2, 0.0));
    const double hi = s.grid.last();
    const double max_step = kSpeedOfLight / (2.0 * box_extent_z);
    FzAxis axis;
    axis.count = static_cast<int>(std::ceil((hi - lo) / max_step - 1e-9)) + 1;
    axis.count = std::max(axis.count, 2);
    axis.start = lo;
    axis.step = (hi - lo) / (axis.count - 1);
    return axis;
}

Spectrum3D remap_to_sphere(const Spectrum2D& s, const FzAxis& fz, double z_ref) {
    const FrequencyGrid& g = s.grid;
    Spectrum3D out;
    out.fx = s.fx;
    out.fy = s.fy;
    out.fz = fz;
    out.grid = g;
    out.values.assign(s.fx.size() * s.fy.size() * static_cast<std::size_t>(fz.count), Symbol{});
    std::vector<Symbol> shell(static_cast<std::size_t>(g.K));
    for (std::size_t ix = 0; ix < s.fx.size(); ++ix)
        for (std::size_t iy = 0; iy < s.fy.size(); ++iy) {
            const double rho2 = s.fx[ix] * s.fx[ix] + s.fy[iy] * s.fy[iy];
            bool any = false;
            for (int k = 0; k < g.K; ++k) {
                const double fk = g.freq(k);
                const double kz2 = fk * fk - rho2;
                Symbol v{};
                if (kz2 > 0.0) {
                    v = s.at(ix, iy, k);
                    if (z_ref != 0.0) v *= turn(std::sqrt(kz2) * z_ref / kSpeedOfLight);
                }
                shell[static_cast<std::size_t>(k)] = v;
                any = any || v != Symbol{};
            }
            if (!any) continue;
            for (int iz = 0; iz < fz.count; ++iz) {
                const double fzv = fz.at(iz);
                if (fzv <= 0.0) continue;
                const double f = std::sqrt(rho2 + fzv * fzv);
                const double t = (f - g.f1) / g.delta;
                if (t < -1e-9 || t > g.K - 1 + 1e-9) continue;
                const int k = std::clamp(static_cast<int>(std::floor(t)), 0, g.K - 2);
                const double w = std::clamp(t - k, 0.0, 1.0);
                Symbol v = (1.0 - w) * shell[static_cast<std::size_t>(k)] + w * shell[static_cast<std::size_t>(k + 1)];
                if (z_ref != 0.0) v *= turn(-fzv * z_ref / kSpeedOfLight);
                out.values[out.index(ix, iy, iz)] = v;
            }
        }
    return out;
}

PowerSpectrum inverse_3d_spectrum(const Spectrum3D& s, const VoxelBox& box) {
    if (s.fx.size() < 2 || s.fy.size() < 2 || s.fz.count < 2)
        throw Error(ErrorKind::InvalidConfig, "spectrum axes need at least two bins");
    if (!(box.extent.x > 0.0 && box.extent.y > 0.0 && box.extent.z > 0.0) ||
        !(box.max_spacing.x > 0.0 && box.max_spacing.y > 0.0 && box.max_spacing.z > 0.0))
        throw Error(ErrorKind::InvalidConfig, "voxel box extent and spacing must be positive");
    const int fx = static_cast<int>(s.fx.size()), fy = static_cast<int>(s.fy.size()), fzn = s.fz.count;
    AxisEval ez(s.fz.start, s.fz.step, fzn, box.center.z, box.extent.z, box.max_spacing.z);
    AxisEval ey(s.fy[0], axis_step(s.fy), fy, box.center.y, box.extent.y, box.max_spacing.y);
    AxisEval ex(s.fx[0], axis_step(s.fx), fx, box.center.x, box.extent.x, box.max_spacing.x);
    const std::size_t iz = static_cast<std::size_t>(ez.count()), iy = static_cast<std::size_t>(ey.count()),
                      ix = static_cast<std::size_t>(ex.count());

    std::vector<Symbol> a(static_cast<std::size_t>(fx) * fy * iz);
    for (std::size_t c = 0; c < static_cast<std::size_t>(fx) * fy; ++c)
        ez.apply(&s.values[c * fzn], 1, &a[c * iz], 1, 1.0);

    std::vector<Symbol> b(static_cast<std::size_t>(fx) * iy * iz);
    for (std::size_t p = 0; p < static_cast<std::size_t>(fx); ++p)
        for (std::size_t z = 0; z < iz; ++z)
            ey.apply(&a[p * fy * iz + z], iz, &b[p * iy * iz + z], iz, 1.0);
    std::vector<Symbol>().swap(a);

    PowerSpectrum out;
    out.nx = ex.count();
    out.ny = ey.count();
    out.nz = ez.count();
    out.origin = {ex.start(), ey.start(), ez.start()};
    out.spacing = {ex.pitch(), ey.pitch(), ez.pitch()};
    out.voxels.resize(ix * iy * iz);
    const double scale = s.fz.step / (s.grid.delta * fx * fy);
    for (std::size_t y = 0; y < iy; ++y)
        for (std::size_t z = 0; z < iz; ++z)
            ex.apply(&b[y * iz + z], iy * iz, &out.voxels[y * iz + z], iy * iz, scale);
    return out;
}

std::array<int, 3> argmax_voxel(const PowerSpectrum& s) {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < s.voxels.size(); ++i) {
        const double m = std::abs(s.voxels[i]);
        if (m > best_mag) { best_mag = m; best = i; }
    }
    const auto nyz = static_cast<std::size_t>(s.ny) * s.nz;
    return {static_cast<int>(best / nyz), static_cast<int>((best % nyz) / s.nz), static_cast<int>(best % s.nz)};
}

PointCloud detect_peaks(const PowerSpectrum& s, double nu) {
    if (!(nu > 0.0 && nu <= 1.0)) throw Error(ErrorKind::InvalidConfig, "peak threshold must lie in (0, 1]");
    std::vector<double> mag(s.voxels.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::abs(s.voxels[i]);
        peak = std::max(peak, mag[i]);
    }
    if (!(peak > 0.0)) throw Error(ErrorKind::EmptySpectrum, "power spectrum is identically zero");
    const double threshold = nu * peak;

    std::vector<std::pair<double, std::size_t>> found;
    for (int x = 0; x < s.nx; ++x)
        for (int y = 0; y < s.ny; ++y)
            for (int z = 0; z < s.nz; ++z) {
                const std::size_t i = s.index(x, y, z);
                const double v = mag[i];
                if (v < threshold) continue;
                bool is_max = true;
                for (int dx = -1; dx <= 1 && is_max; ++dx)
                    for (int dy = -1; dy <= 1 && is_max; ++dy)
                        for (int dz = -1; dz <= 1 && is_max; ++dz) {
                            const int xx = x + dx, yy = y + dy, zz = z + dz;
                            if ((dx == 0 && dy == 0 && dz == 0) || xx < 0 || yy < 0 || zz < 0 || xx >= s.nx ||
                                yy >= s.ny || zz >= s.nz)
                                continue;
                            if (mag[s.index(xx, yy, zz)] > v) is_max = false;
                        }
                if (is_max) found.emplace_back(v, i);
            }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    PointCloud out;
    out.reserve(found.size());
    const auto nyz = static_cast<std::size_t>(s.ny) * s.nz;
    for (const auto& [v, i] : found)
        out.push_back(s.position(static_cast<int>(i / nyz), static_cast<int>((i % nyz) / s.nz), static_cast<int>(i % s.nz)));
    return out;
}

void write_slice_csv(std::ostream& os, const PowerSpectrum& s, SlicePlane plane, int ix, int iy, int iz) {
    os << "x,y,z,abs_phi\n";
    const auto old = os.precision(9);
    const auto emit = [&](int x, int y, int z) {
        const Point3 p = s.position(x, y, z);
        os << p.x << ',' << p.y << ',' << p.z << ',' << std::abs(s.at(x, y, z)) << '\n';
    };
    switch (plane) {
        case SlicePlane::XY:
            for (int x = 0; x < s.nx; ++x)
                for (int y = 0; y < s.ny; ++y) emit(x, y, iz);
            break;
        case SlicePlane::XZ:
            for (int x = 0; x < s.nx; ++x)
                for (int z = 0; z < s.nz; ++z) emit(x, iy, z);
            break;
        case SlicePlane::YZ:
            for (int y = 0; y < s.ny; ++y)
                for (int z = 0; z < s.nz; ++z) emit(ix, y, z);
            break;
    }
    os.precision(old);
}

PowerSpectrum image_aperture(const Eigen::MatrixXcd& symbols, const PointCloud& sv, const FrequencyGrid& grid,
                             const VoxelBox& box, const ImagingOptions& options) {
    const ApertureSamples samples = sample_aperture(symbols, sv, grid, options.aperture_spacing);
    const Spectrum2D s2 = forward_2d_spectrum(samples, 2.0 * std::max(box.extent.x, box.extent.y));
    const FzAxis fz = default_fz_axis(s2, box.extent.z);
    const double z_ref = options.z_ref != 0.0 ? options.z_ref : box.center.z;
    Spectrum3D s3 = remap_to_sphere(s2, fz, z_ref);
    // Stationary-phase amplitude of the point response at z_ref, so a single
    // emitter keeps the coherent gain of back-projection.
    const double depth = std::abs(z_ref);
    if (depth > 0.0) {
        const double area = samples.dx() * samples.dy();
        for (std::size_t ix = 0; ix < s3.fx.size(); ++ix)
            for (std::size_t iy = 0; iy < s3.fy.size(); ++iy) {
                const double rho2 = s3.fx[ix] * s3.fx[ix] + s3.fy[iy] * s3.fy[iy];
                for (int iz = 0; iz < fz.count; ++iz) {
                    Symbol& v = s3.values[s3.index(ix, iy, iz)];
                    if (v == Symbol{}) continue;
                    const double fzv = fz.at(iz);
                    v *= kSpeedOfLight * std::sqrt(rho2 + fzv * fzv) * depth / (fzv * fzv * area);
                }
            }
    }
    return inverse_3d_spectrum(s3, box);
}

}  // namespace compop
