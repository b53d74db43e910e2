#include "fwmpc/path.hpp"

#include "fwmpc/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fwmpc {

namespace {

using Segment = std::array<Eigen::Vector3d, 4>;

// Interpolating cubic spline through `points` at parameters `knots`.
// Open: knots.size() == points.size(), natural end conditions.
// Closed: knots.size() == points.size() + 1, periodic.
std::vector<Segment> fit_cubic_spline(const std::vector<Eigen::Vector3d>& points, const std::vector<double>& knots,
                                      bool closed)
{
    const int np = static_cast<int>(points.size());
    const int nseg = closed ? np : np - 1;
    std::vector<double> h(nseg);
    for (int i = 0; i < nseg; ++i) h[i] = knots[i + 1] - knots[i];
    auto pt = [&](int i) -> const Eigen::Vector3d& { return points[((i % np) + np) % np]; };

    // Unknowns: second derivatives at each knot.
    const int nm = closed ? np : np;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nm, 3);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * nm);
    for (int i = 0; i < nm; ++i) {
        if (!closed && (i == 0 || i == nm - 1)) {
            trip.emplace_back(i, i, 1.0);
            continue;
        }
        const int im = closed ? (i - 1 + nseg) % nseg : i - 1;
        const double hm = h[im];
        const double hp = h[i % nseg];
        const int left = closed ? (i - 1 + nm) % nm : i - 1;
        const int right = closed ? (i + 1) % nm : i + 1;
        trip.emplace_back(i, left, hm);
        trip.emplace_back(i, i, 2.0 * (hm + hp));
        trip.emplace_back(i, right, hp);
        const Eigen::Vector3d r = 6.0 * ((pt(i + 1) - pt(i)) / hp - (pt(i) - pt(i - 1)) / hm);
        rhs.row(i) = r.transpose();
    }
    Eigen::SparseMatrix<double> A(nm, nm);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw ArgumentError("spline system is singular");
    const Eigen::MatrixXd M = lu.solve(rhs);

    std::vector<Segment> segs(nseg);
    for (int i = 0; i < nseg; ++i) {
        const int j = (i + 1) % nm;
        const Eigen::Vector3d Mi = M.row(i).transpose();
        const Eigen::Vector3d Mj = M.row(closed ? j : i + 1).transpose();
        const Eigen::Vector3d& yi = pt(i);
        const Eigen::Vector3d& yj = pt(i + 1);
        segs[i][0] = yi;
        segs[i][1] = (yj - yi) / h[i] - h[i] * (2.0 * Mi + Mj) / 6.0;
        segs[i][2] = Mi / 2.0;
        segs[i][3] = (Mj - Mi) / (6.0 * h[i]);
    }
    return segs;
}

double segment_speed(const Segment& s, double u)
{
    return (s[1] + u * (2.0 * s[2] + 3.0 * u * s[3])).norm();
}

Eigen::Vector3d segment_eval(const Segment& s, double u) { return s[0] + u * (s[1] + u * (s[2] + u * s[3])); }

template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson quadrature of f over [a, b].
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol)
{
    if (b <= a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

double segment_arclength(const Segment& s, double u)
{
    return adaptive_simpson([&](double t) { return segment_speed(s, t); }, 0.0, u, 1e-13);
}

// Parameter u in [0, hmax] where the segment arc length equals target.
double invert_arclength(const Segment& s, double hmax, double target)
{
    double lo = 0.0, hi = hmax;
    double u = std::clamp(target / std::max(segment_speed(s, 0.0), 1e-12), 0.0, hmax);
    for (int it = 0; it < 60; ++it) {
        const double g = segment_arclength(s, u) - target;
        if (std::abs(g) < 1e-12) break;
        if (g > 0.0) hi = u; else lo = u;
        const double v = segment_speed(s, u);
        double next = u - g / std::max(v, 1e-12);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        u = next;
    }
    return u;
}

}  // namespace

ArcLengthPath ArcLengthPath::build(const std::vector<Eigen::Vector3d>& samples, bool closed, double speed_tolerance,
                                   double cache_spacing)
{
    if (samples.size() < 4) throw ArgumentError("path needs at least 4 samples");
    if (!(speed_tolerance > 0.0)) throw ArgumentError("speed tolerance must be positive");
    if (!(cache_spacing > 0.0)) throw ArgumentError("cache spacing must be positive");
    for (const auto& p : samples) {
        if (!p.allFinite()) throw ArgumentError("path sample is not finite");
    }

    std::vector<Eigen::Vector3d> pts = samples;
    if (closed && (pts.front() - pts.back()).norm() < 1e-9) pts.pop_back();
    if (pts.size() < 4) throw ArgumentError("path needs at least 4 distinct samples");
    const int np = static_cast<int>(pts.size());
    const int nseg = closed ? np : np - 1;

    std::vector<double> chord(nseg + 1, 0.0);
    for (int i = 0; i < nseg; ++i) {
        const double c = (pts[(i + 1) % np] - pts[i]).norm();
        if (c < 1e-9) throw ArgumentError("path has coincident consecutive samples at index " + std::to_string(i));
        chord[i + 1] = chord[i] + c;
    }
    const auto base = fit_cubic_spline(pts, chord, closed);

    std::vector<double> cum(nseg + 1, 0.0);
    for (int i = 0; i < nseg; ++i) cum[i + 1] = cum[i] + segment_arclength(base[i], chord[i + 1] - chord[i]);
    const double L = cum.back();

    ArcLengthPath path;
    path.closed_ = closed;
    path.length_ = L;
    path.cache_spacing_ = cache_spacing;

    int m = std::max(nseg, static_cast<int>(std::ceil(L / 1.0)));
    for (int refinement = 0;; ++refinement) {
        // Stations uniformly spaced in arc length of the chord-length spline.
        const int nst = closed ? m : m + 1;
        std::vector<Eigen::Vector3d> stations(nst);
        std::vector<double> knots(m + 1);
        for (int j = 0; j <= m; ++j) knots[j] = L * j / m;
        int seg = 0;
        for (int j = 0; j < nst; ++j) {
            const double s = knots[j];
            while (seg < nseg - 1 && cum[seg + 1] <= s) ++seg;
            const double hseg = chord[seg + 1] - chord[seg];
            const double u = invert_arclength(base[seg], hseg, std::min(s - cum[seg], cum[seg + 1] - cum[seg]));
            stations[j] = segment_eval(base[seg], u);
        }
        path.segments_ = fit_cubic_spline(stations, knots, closed);
        path.h_ = L / m;
        const double dev = path.max_speed_deviation(8 * m);
        if (dev <= speed_tolerance) break;
        if (refinement >= 8) {
            throw ArgumentError("arc-length reparameterization did not reach the speed tolerance");
        }
        m *= 2;
    }

    const int ncache = std::max(1, static_cast<int>(std::ceil(L / cache_spacing)));
    const double dc = L / ncache;
    path.cache_spacing_ = dc;
    const int count = closed ? ncache : ncache + 1;
    path.cache_.reserve(count);
    for (int j = 0; j < count; ++j) path.cache_.push_back(path.position(std::min(j * dc, L)));
    return path;
}

double ArcLengthPath::wrap(double psi) const
{
    if (!std::isfinite(psi)) throw DomainError("path parameter is not finite");
    if (closed_) {
        double w = std::fmod(psi, length_);
        if (w < 0.0) w += length_;
        if (w >= length_) w = 0.0;
        return w;
    }
    const double slack = 1e-9 * std::max(1.0, length_);
    if (psi < -slack || psi > length_ + slack) {
        throw DomainError("path parameter " + std::to_string(psi) + " outside [0, " + std::to_string(length_) + "]");
    }
    return std::clamp(psi, 0.0, length_);
}

std::pair<int, double> ArcLengthPath::locate(double psi) const
{
    const double w = wrap(psi);
    const int n = static_cast<int>(segments_.size());
    const int i = std::clamp(static_cast<int>(std::floor(w / h_)), 0, n - 1);
    return {i, w - i * h_};
}

Eigen::Vector3d ArcLengthPath::position(double psi) const
{
    const auto [i, u] = locate(psi);
    return segment_eval(segments_[i], u);
}

PathDerivatives ArcLengthPath::derivatives(double psi) const
{
    const auto [i, u] = locate(psi);
    const auto& s = segments_[i];
    PathDerivatives d;
    d.r = segment_eval(s, u);
    d.d1 = s[1] + u * (2.0 * s[2] + 3.0 * u * s[3]);
    d.d2 = 2.0 * s[2] + 6.0 * u * s[3];
    d.d3 = 6.0 * s[3];
    return d;
}

PathFrame ArcLengthPath::frame_at(double psi) const
{
    const auto d = derivatives(psi);
    const double speed = d.d1.norm();
    PathFrame f;
    f.position = d.r;
    f.tangent = d.d1 / speed;
    f.curvature = d.d1.cross(d.d2).norm() / (speed * speed * speed);
    return f;
}

double ArcLengthPath::distance_sq(const Eigen::Vector3d& point, double psi) const
{
    return (point - position(psi)).squaredNorm();
}

double ArcLengthPath::refine(const Eigen::Vector3d& point, double lo, double hi, double start) const
{
    if (!closed_) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, length_);
    }
    double best = start;
    double best_d = distance_sq(point, start);

    // Golden section on the bracket, then Newton on the orthogonality
    // condition (r_P - p) . r_P' = 0.
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = distance_sq(point, c), fd = distance_sq(point, d);
    for (int it = 0; it < 60 && (b - a) > 1e-10; ++it) {
        if (fc <= fd) {
            b = d; d = c; fd = fc;
            c = b - kInvPhi * (b - a);
            fc = distance_sq(point, c);
        } else {
            a = c; c = d; fc = fd;
            d = a + kInvPhi * (b - a);
            fd = distance_sq(point, d);
        }
    }
    double x = 0.5 * (a + b);
    double fx = distance_sq(point, x);
    if (fx < best_d) { best = x; best_d = fx; }

    for (int it = 0; it < 4; ++it) {
        const auto der = derivatives(x);
        const Eigen::Vector3d diff = der.r - point;
        const double g = diff.dot(der.d1);
        const double gp = der.d1.squaredNorm() + diff.dot(der.d2);
        if (!(gp > 0.0)) break;
        const double next = x - g / gp;
        if (next < lo || next > hi) break;
        const double fn = distance_sq(point, next);
        if (fn > fx) break;
        x = next;
        fx = fn;
    }
    if (fx < best_d) { best = x; best_d = fx; }
    return best;
}

double ArcLengthPath::closest_param_global(const Eigen::Vector3d& point) const
{
    std::size_t best = 0;
    double best_d = (cache_[0] - point).squaredNorm();
    for (std::size_t j = 1; j < cache_.size(); ++j) {
        const double dj = (cache_[j] - point).squaredNorm();
        if (dj < best_d) {
            best_d = dj;
            best = j;
        }
    }
    const double psi = std::min(static_cast<double>(best) * cache_spacing_, length_);
    return wrap(refine(point, psi - cache_spacing_, psi + cache_spacing_, psi));
}

double ArcLengthPath::closest_param_local(const Eigen::Vector3d& point, double hint, double window) const
{
    window = std::max(window, cache_spacing_);
    if (closed_ && 2.0 * window >= length_) return closest_param_global(point);

    double lo = hint - window;
    double hi = hint + window;
    bool lo_is_boundary = true, hi_is_boundary = true;
    if (!closed_) {
        if (lo <= 0.0) { lo = 0.0; lo_is_boundary = false; }
        if (hi >= length_) { hi = length_; hi_is_boundary = false; }
    }
    const double step = std::min(cache_spacing_, (hi - lo) / 10.0);
    const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)) + 1);
    const double ds = (hi - lo) / (n - 1);
    int best = 0;
    double best_d = distance_sq(point, lo);
    for (int k = 1; k < n; ++k) {
        const double dk = distance_sq(point, lo + k * ds);
        if (dk < best_d) {
            best_d = dk;
            best = k;
        }
    }
    if ((best == 0 && lo_is_boundary) || (best == n - 1 && hi_is_boundary)) {
        return closest_param_global(point);
    }
    const double psi = lo + best * ds;
    return wrap(refine(point, psi - ds, psi + ds, psi));
}

double ArcLengthPath::max_speed_deviation(int probes) const
{
    double worst = 0.0;
    const int n = std::max(probes, 1);
    for (int k = 0; k < n; ++k) {
        const double psi = closed_ ? length_ * k / n : length_ * k / std::max(n - 1, 1);
        worst = std::max(worst, std::abs(derivatives(psi).d1.norm() - 1.0));
    }
    return worst;
}

double ArcLengthPath::min_curvature_radius(int probes) const
{
    double kmax = 0.0;
    const int n = std::max(probes, 1);
    for (int k = 0; k < n; ++k) kmax = std::max(kmax, frame_at(length_ * k / n).curvature);
    return kmax > 0.0 ? 1.0 / kmax : std::numeric_limits<double>::infinity();
}

std::vector<Eigen::Vector3d> ArcLengthPath::sample(double spacing) const
{
    if (!(spacing > 0.0)) throw ArgumentError("sample spacing must be positive");
    const int n = std::max(1, static_cast<int>(std::ceil(length_ / spacing)));
    std::vector<Eigen::Vector3d> out;
    const int count = closed_ ? n : n + 1;
    out.reserve(count);
    for (int j = 0; j < count; ++j) out.push_back(position(std::min(length_ * j / n, length_)));
    return out;
}

double ArcLengthPath::max_second_derivative_jump() const
{
    double worst = 0.0;
    const std::size_t n = segments_.size();
    const std::size_t joints = closed_ ? n : n - 1;
    for (std::size_t i = 0; i < joints; ++i) {
        const auto& a = segments_[i];
        const auto& b = segments_[(i + 1) % n];
        const Eigen::Vector3d end = 2.0 * a[2] + 6.0 * h_ * a[3];
        worst = std::max(worst, (end - 2.0 * b[2]).cwiseAbs().maxCoeff());
    }
    return worst;
}

ArcLengthPath lissajous_path(const LissajousSpec& spec)
{
    if (!(spec.amp_n > 0.0) || !(spec.amp_e > 0.0) || spec.amp_d < 0.0) {
        throw ArgumentError("Lissajous amplitudes must be positive (vertical may be zero)");
    }
    if (spec.freq_n <= 0 || spec.freq_e <= 0 || spec.freq_d <= 0) {
        throw ArgumentError("Lissajous frequencies must be positive integers");
    }
    if (spec.samples < 64) throw ArgumentError("Lissajous path needs at least 64 samples");
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(spec.samples);
    for (int j = 0; j < spec.samples; ++j) {
        const double t = 2.0 * std::numbers::pi * j / spec.samples;
        pts.emplace_back(spec.amp_n * std::sin(spec.freq_n * t + spec.phase), spec.amp_e * std::sin(spec.freq_e * t),
                         -(spec.alt_offset + spec.amp_d * std::cos(spec.freq_d * t)));
    }
    return ArcLengthPath::build(pts, true);
}

const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"path1", "path2", "path3", "path4"};
    return names;
}

LissajousSpec lissajous_preset(const std::string& name)
{
    // Amplitudes are scaled so the minimum curvature radii come out at
    // 41.7, 6.9, 30.2 and 11.9 m; path3's aspect ratio sets an 8.4 deg
    // steepest climb.
    LissajousSpec s;
    if (name == "path1") {
        s.amp_n = 199.76; s.amp_e = 99.88; s.amp_d = 0.0;
        s.freq_n = 1; s.freq_e = 2; s.freq_d = 1; s.phase = 0.0;
    } else if (name == "path2") {
        s.amp_n = 131.04; s.amp_e = 65.52; s.amp_d = 0.0;
        s.freq_n = 1; s.freq_e = 3; s.freq_d = 1; s.phase = std::numbers::pi / 2;
    } else if (name == "path3") {
        s.amp_n = 158.92; s.amp_e = 93.48; s.amp_d = 20.0;
        s.freq_n = 1; s.freq_e = 2; s.freq_d = 1; s.phase = 0.0;
    } else if (name == "path4") {
        s.amp_n = 111.19; s.amp_e = 74.13; s.amp_d = 20.0;
        s.freq_n = 2; s.freq_e = 3; s.freq_d = 1; s.phase = 0.0;
    } else {
        std::string valid;
        for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
        throw ArgumentError("unknown path preset '" + name + "' (valid: " + valid + ")");
    }
    s.alt_offset = 100.0;
    s.samples = 2000;
    return s;
}

std::vector<Eigen::Vector3d> read_path_table(std::istream& in)
{
    std::vector<Eigen::Vector3d> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (char& c : line) {
            if (c == ',') c = ' ';
        }
        std::istringstream ss(line);
        double n, e, d;
        if (!(ss >> n)) continue;
        if (!(ss >> e >> d)) throw IoError("path table line " + std::to_string(lineno) + ": expected n e d");
        pts.emplace_back(n, e, d);
    }
    return pts;
}

std::vector<Eigen::Vector3d> read_path_table_file(const std::string& filename)
{
    std::ifstream in(filename);
    if (!in) throw IoError("cannot open path table '" + filename + "'");
    return read_path_table(in);
}

void write_path_table(std::ostream& out, const ArcLengthPath& path, double spacing)
{
    out << "# n e d [m]; closed=" << (path.closed() ? 1 : 0) << " length=" << path.total_length() << "\n";
    out.precision(10);
    for (const auto& p : path.sample(spacing)) out << p(0) << ' ' << p(1) << ' ' << p(2) << '\n';
}

}  // namespace fwmpc
