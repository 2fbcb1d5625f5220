#include "lsg/active_contour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lsg/csv.hpp"
#include "lsg/parallel.hpp"

namespace lsg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
constexpr double kBandHalfWidth = 6.0;  // pixels around the zero level updated per iteration
constexpr double kDeltaEps = 1.5;       // smoothed delta width
constexpr double kRegionGain = 25.0;    // region force scale after /255^2 normalization

// 1-D squared distance transform (lower envelope of parabolas).
void edt_1d(const double* f, double* d, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (f[v[0]] == kInf && k == 0) {
            v[0] = q;
            continue;
        }
        double s = 0.0;
        while (true) {
            const int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        if (f[v[0]] == kInf) {
            d[q] = kInf;
            continue;
        }
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

double clamp_coord(const std::vector<double>& a, int w, int h, int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return a[static_cast<std::size_t>(y) * w + x];
}

// Separable Gaussian blur, sigma = 1.0, radius 4, weights normalized.
std::vector<double> gaussian_blur(const std::vector<double>& src, int w, int h) {
    constexpr int radius = 4;
    double kernel[2 * radius + 1];
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i);
        sum += kernel[i + radius];
    }
    for (double& kv : kernel) kv /= sum;

    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * clamp_coord(src, w, h, x + i, y);
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * clamp_coord(tmp, w, h, x, y + i);
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

// Godunov update for |grad d| = 1 given the smaller axis neighbours.
double eikonal_update(double a, double b) {
    if (a > b) std::swap(a, b);
    if (b == kInf || b - a >= 1.0) return a + 1.0;
    const double disc = 2.0 - (a - b) * (a - b);
    return 0.5 * (a + b + std::sqrt(disc));
}

// Reinitializes phi to a signed distance via fast sweeping, preserving the
// subpixel interface location estimated from edge crossings.
void reinit_fast_sweeping(std::vector<double>& phi, int w, int h) {
    const std::size_t n = phi.size();
    std::vector<double> d(n, kInf);
    std::vector<signed char> sgn(n);
    for (std::size_t i = 0; i < n; ++i) sgn[i] = phi[i] < 0.0 ? -1 : 1;

    bool any_interface = false;
    auto seed_edge = [&](std::size_t p, std::size_t q) {
        if ((phi[p] < 0.0) == (phi[q] < 0.0)) return;
        any_interface = true;
        const double ap = std::abs(phi[p]), aq = std::abs(phi[q]);
        const double denom = ap + aq;
        const double theta = denom > 0.0 ? ap / denom : 0.5;
        d[p] = std::min(d[p], theta);
        d[q] = std::min(d[q], 1.0 - theta);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            if (x + 1 < w) seed_edge(p, p + 1);
            if (y + 1 < h) seed_edge(p, p + w);
        }
    if (!any_interface) {
        // Contour vanished; keep the sign and saturate the magnitude.
        const double big = w + h;
        for (std::size_t i = 0; i < n; ++i) phi[i] = sgn[i] * big;
        return;
    }

    auto sweep = [&](int x0, int x1, int dx, int y0, int y1, int dy) {
        for (int y = y0; y != y1; y += dy) {
            for (int x = x0; x != x1; x += dx) {
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                const double left = x > 0 ? d[p - 1] : kInf;
                const double right = x + 1 < w ? d[p + 1] : kInf;
                const double up = y > 0 ? d[p - w] : kInf;
                const double down = y + 1 < h ? d[p + w] : kInf;
                const double cand = eikonal_update(std::min(left, right), std::min(up, down));
                if (cand < d[p]) d[p] = cand;
            }
        }
    };
    for (int round = 0; round < 2; ++round) {
        sweep(0, w, 1, 0, h, 1);
        sweep(w - 1, -1, -1, 0, h, 1);
        sweep(0, w, 1, h - 1, -1, -1);
        sweep(w - 1, -1, -1, h - 1, -1, -1);
    }
    for (std::size_t i = 0; i < n; ++i) phi[i] = sgn[i] * d[i];
}

} // namespace

void AcParams::validate() const {
    if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("AcParams: w must be in [0,1]");
    if (r_kernel < 1 || r_kernel > 12)
        throw ValidationError("AcParams: r_kernel must be an integer in [1,12]");
    if (max_iters < 1) throw ValidationError("AcParams: max_iters must be > 0");
    if (!(step_size > 0.0)) throw ValidationError("AcParams: step_size must be > 0");
    if (reinit_every < 1) throw ValidationError("AcParams: reinit_every must be >= 1");
    if (!(stop_tol >= 0.0)) throw ValidationError("AcParams: stop_tol must be >= 0");
}

std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& set_pixels,
                                               int width, int height) {
    std::vector<double> d(set_pixels.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = set_pixels[i] ? 0.0 : kInf;

    const int maxdim = std::max(width, height);
    std::vector<double> f(maxdim), row(maxdim), z(maxdim + 1);
    std::vector<int> v(maxdim);

    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) f[y] = d[static_cast<std::size_t>(y) * width + x];
        edt_1d(f.data(), row.data(), height, v.data(), z.data());
        for (int y = 0; y < height; ++y) d[static_cast<std::size_t>(y) * width + x] = row[y];
    }
    for (int y = 0; y < height; ++y) {
        double* drow = d.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) f[x] = drow[x];
        edt_1d(f.data(), drow, width, v.data(), z.data());
    }
    return d;
}

LevelSet init_levelset(const Mask& nominal) {
    const std::size_t fg = nominal.foreground_count();
    if (fg == 0 || fg == nominal.size())
        throw ValidationError("init_levelset: nominal mask must contain both classes");

    std::vector<std::uint8_t> inv(nominal.data.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = nominal.data[i] ? 0 : 1;
    const auto d_to_fg = squared_distance_transform(nominal.data, nominal.width, nominal.height);
    const auto d_to_bg = squared_distance_transform(inv, nominal.width, nominal.height);

    LevelSet ls;
    ls.width = nominal.width;
    ls.height = nominal.height;
    ls.phi.resize(nominal.size());
    for (std::size_t i = 0; i < ls.phi.size(); ++i) {
        ls.phi[i] = nominal.data[i] ? -(std::sqrt(d_to_bg[i]) - 0.5)
                                    : (std::sqrt(d_to_fg[i]) - 0.5);
    }
    return ls;
}

Mask evolve(const Image& image, const LevelSet& init, const AcParams& params,
            EvolveTrace* trace) {
    params.validate();
    if (image.width != init.width || image.height != init.height)
        throw ShapeError("evolve: image " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " vs level set " +
                         std::to_string(init.width) + "x" + std::to_string(init.height));

    const int w = image.width, h = image.height;
    const std::size_t n = image.size();

    // Edge indicator from blurred central-difference gradients. Differencing
    // before blurring keeps the w=0 path exactly invariant to constant
    // intensity shifts.
    std::vector<double> ix(n), iy(n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto I = [&](int xx, int yy) {
                return static_cast<double>(
                    image.data[static_cast<std::size_t>(std::clamp(yy, 0, h - 1)) * w +
                               std::clamp(xx, 0, w - 1)]);
            };
            ix[static_cast<std::size_t>(y) * w + x] = 0.5 * (I(x + 1, y) - I(x - 1, y));
            iy[static_cast<std::size_t>(y) * w + x] = 0.5 * (I(x, y + 1) - I(x, y - 1));
        }
    const auto bx = gaussian_blur(ix, w, h);
    const auto by = gaussian_blur(iy, w, h);
    std::vector<double> g(n), gx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = 1.0 / (1.0 + bx[i] * bx[i] + by[i] * by[i]);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            gx[p] = 0.5 * (clamp_coord(g, w, h, x + 1, y) - clamp_coord(g, w, h, x - 1, y));
            gy[p] = 0.5 * (clamp_coord(g, w, h, x, y + 1) - clamp_coord(g, w, h, x, y - 1));
        }

    std::vector<double> phi = init.phi;
    std::vector<double> phi_next = phi;
    std::vector<signed char> sign_snapshot(n);
    for (std::size_t i = 0; i < n; ++i) sign_snapshot[i] = phi[i] < 0.0 ? 1 : 0;

    const int r = params.r_kernel;
    const double inv255sq = 1.0 / (255.0 * 255.0);

    int iter = 0;
    for (; iter < params.max_iters; ++iter) {
        double energy_region = 0.0, energy_contour = 0.0;
        double c_in = 0.0, c_out = 0.0;
        if (trace) {
            // Monitored objective: global two-phase fit plus weighted contour
            // length. The force uses local means; on the traced clean-image
            // tests local and global statistics coincide.
            double sum_in = 0.0, sum_out = 0.0;
            std::size_t n_in = 0, n_out = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (phi[i] < 0.0) {
                    sum_in += image.data[i];
                    ++n_in;
                } else {
                    sum_out += image.data[i];
                    ++n_out;
                }
            }
            c_in = n_in ? sum_in / n_in : 0.0;
            c_out = n_out ? sum_out / n_out : 0.0;
        }

        // Band update; each pixel writes only its own phi_next entry.
        parallel_for(h, [&](long long yy) {
            const int y = static_cast<int>(yy);
            for (int x = 0; x < w; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                const double ph = phi[p];
                if (std::abs(ph) > kBandHalfWidth) {
                    phi_next[p] = ph;
                    continue;
                }
                const auto P = [&](int xx, int yy2) { return clamp_coord(phi, w, h, xx, yy2); };
                const double pxm = P(x - 1, y), pxp = P(x + 1, y);
                const double pym = P(x, y - 1), pyp = P(x, y + 1);
                const double dx = 0.5 * (pxp - pxm);
                const double dy = 0.5 * (pyp - pym);
                const double dxx = pxp - 2.0 * ph + pxm;
                const double dyy = pyp - 2.0 * ph + pym;
                const double dxy = 0.25 * (P(x + 1, y + 1) - P(x - 1, y + 1) -
                                           P(x + 1, y - 1) + P(x - 1, y - 1));
                const double grad_sq = dx * dx + dy * dy;
                const double grad_mag = std::sqrt(grad_sq);
                const double kappa =
                    (dxx * dy * dy - 2.0 * dx * dy * dxy + dyy * dx * dx) /
                    std::pow(grad_sq + 1e-12, 1.5);

                double dphi = (params.curvature_weight + (1.0 - params.w) * g[p]) * kappa *
                              grad_mag;

                // Upwind advection toward edge wells.
                const double ax = gx[p], ay = gy[p];
                dphi += (1.0 - params.w) *
                        (std::max(ax, 0.0) * (ph - pxm) + std::min(ax, 0.0) * (pxp - ph) +
                         std::max(ay, 0.0) * (ph - pym) + std::min(ay, 0.0) * (pyp - ph));

                if (params.w > 0.0) {
                    // Local two-phase means over the dense stencil.
                    double sum_in = 0.0, sum_out = 0.0;
                    int cnt_in = 0, cnt_out = 0;
                    const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
                    const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
                    for (int sy = y0; sy <= y1; ++sy) {
                        const std::size_t row = static_cast<std::size_t>(sy) * w;
                        for (int sx = x0; sx <= x1; ++sx) {
                            const double iv = image.data[row + sx];
                            if (phi[row + sx] < 0.0) {
                                sum_in += iv;
                                ++cnt_in;
                            } else {
                                sum_out += iv;
                                ++cnt_out;
                            }
                        }
                    }
                    if (cnt_in > 0 && cnt_out > 0) {
                        const double m_in = sum_in / cnt_in;
                        const double m_out = sum_out / cnt_out;
                        const double iv = image.data[p];
                        const double rs =
                            ((iv - m_out) * (iv - m_out) - (iv - m_in) * (iv - m_in)) * inv255sq;
                        const double delta =
                            kDeltaEps / (kPi * (kDeltaEps * kDeltaEps + ph * ph));
                        dphi -= params.w * kRegionGain * rs * delta;
                    }
                }
                phi_next[p] = ph + params.step_size * dphi;
            }
        });
        std::swap(phi, phi_next);

        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(phi[i]))
                throw NumericError("evolve: non-finite level set at iteration " +
                                   std::to_string(iter + 1));
        }

        if (trace) {
            for (std::size_t i = 0; i < n; ++i) {
                const double iv = image.data[i];
                const double fit = phi[i] < 0.0 ? (iv - c_in) * (iv - c_in)
                                                : (iv - c_out) * (iv - c_out);
                energy_region += fit * inv255sq;
            }
            // Geometric contour integral via marching squares; invariant to
            // the steepness of phi, unlike a delta(phi)*|grad phi| sum.
            for (int y = 0; y + 1 < h; ++y) {
                for (int x = 0; x + 1 < w; ++x) {
                    const double p00 = phi[static_cast<std::size_t>(y) * w + x];
                    const double p10 = phi[static_cast<std::size_t>(y) * w + x + 1];
                    const double p01 = phi[static_cast<std::size_t>(y + 1) * w + x];
                    const double p11 = phi[static_cast<std::size_t>(y + 1) * w + x + 1];
                    double px[4], py[4];
                    int m = 0;
                    auto cross = [&](double a, double b, double ax, double ay, double bx,
                                     double by) {
                        if ((a < 0.0) == (b < 0.0)) return;
                        const double t = a / (a - b);
                        px[m] = ax + t * (bx - ax);
                        py[m] = ay + t * (by - ay);
                        ++m;
                    };
                    cross(p00, p10, x, y, x + 1, y);
                    cross(p10, p11, x + 1, y, x + 1, y + 1);
                    cross(p11, p01, x + 1, y + 1, x, y + 1);
                    cross(p01, p00, x, y + 1, x, y);
                    if (m == 2) {
                        const double len = std::hypot(px[0] - px[1], py[0] - py[1]);
                        const double gm =
                            g[static_cast<std::size_t>(std::lround(0.5 * (py[0] + py[1]))) * w +
                              static_cast<std::size_t>(std::lround(0.5 * (px[0] + px[1])))];
                        energy_contour +=
                            ((1.0 - params.w) * gm + params.curvature_weight) * len;
                    }
                }
            }
            trace->energy.push_back(params.w * kRegionGain * energy_region + energy_contour);
        }

        if ((iter + 1) % params.reinit_every == 0) {
            reinit_fast_sweeping(phi, w, h);
            if (trace) trace->reinit_iterations.push_back(iter + 1);
        }

        if ((iter + 1) % 10 == 0) {
            std::size_t changed = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const signed char s = phi[i] < 0.0 ? 1 : 0;
                changed += (s != sign_snapshot[i]);
                sign_snapshot[i] = s;
            }
            if (static_cast<double>(changed) / static_cast<double>(n) < params.stop_tol) {
                ++iter;
                break;
            }
        }
    }
    if (trace) trace->iterations = iter;

    Mask out(w, h);
    for (std::size_t i = 0; i < n; ++i) out.data[i] = phi[i] < 0.0 ? 1 : 0;
    return out;
}

int GridRange::count() const {
    if (!(step > 0.0)) throw ValidationError("GridRange: step must be > 0");
    if (max < min) throw ValidationError("GridRange: max must be >= min");
    return static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
}

CalibrationResult calibrate(const std::vector<CalibrationPair>& pairs, const GridRange& w_grid,
                            const GridRange& r_grid, const AcParams& base) {
    if (pairs.empty()) throw ValidationError("calibrate: no training pairs");
    const int wn = w_grid.count();
    const int rn = r_grid.count();

    // Initial level sets are shared across grid points.
    std::vector<LevelSet> inits;
    inits.reserve(pairs.size());
    for (const auto& pair : pairs) {
        if (!pair.truth.same_shape(pair.nominal) || pair.nominal.width != pair.image.width ||
            pair.nominal.height != pair.image.height)
            throw ShapeError("calibrate: image/nominal/truth shapes differ");
        inits.push_back(init_levelset(pair.nominal));
    }

    std::vector<AcScoreRow> table(static_cast<std::size_t>(wn) * rn);
    parallel_for(static_cast<long long>(wn) * rn, [&](long long idx) {
        const int wi = static_cast<int>(idx / rn);
        const int ri = static_cast<int>(idx % rn);
        AcParams p = base;
        p.w = w_grid.min + wi * w_grid.step;
        p.r_kernel = static_cast<int>(std::lround(r_grid.min + ri * r_grid.step));
        double acc_sum = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Mask pred = evolve(pairs[i].image, inits[i], p);
            std::size_t correct = 0;
            for (std::size_t q = 0; q < pred.data.size(); ++q)
                correct += (pred.data[q] == pairs[i].truth.data[q]);
            acc_sum += static_cast<double>(correct) / static_cast<double>(pred.data.size());
        }
        table[static_cast<std::size_t>(idx)] = {p.w, p.r_kernel,
                                                acc_sum / static_cast<double>(pairs.size())};
    });

    CalibrationResult result;
    result.table = table;
    result.w = table[0].w;
    result.r_kernel = table[0].r_kernel;
    result.best_accuracy = table[0].mean_accuracy;
    for (const auto& row : table) {
        if (row.mean_accuracy > result.best_accuracy) {
            result.best_accuracy = row.mean_accuracy;
            result.w = row.w;
            result.r_kernel = row.r_kernel;
        }
    }
    return result;
}

void write_score_table_csv(const std::filesystem::path& path,
                           const std::vector<AcScoreRow>& table) {
    CsvWriter csv;
    csv.row({"w", "r_kernel", "mean_accuracy"});
    for (const auto& row : table)
        csv.row({format_double(row.w), std::to_string(row.r_kernel),
                 format_double(row.mean_accuracy)});
    csv.write(path);
}

} // namespace lsg
