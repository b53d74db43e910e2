#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace fwmpc {

struct PathFrame {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d tangent = Eigen::Vector3d::UnitX();  // unit (T_n, T_e, T_d)
    double curvature = 0.0;                              // 1/m
};

/// Position and parameter derivatives up to third order.
struct PathDerivatives {
    Eigen::Vector3d r;
    Eigen::Vector3d d1;
    Eigen::Vector3d d2;
    Eigen::Vector3d d3;
};

/// Unit-speed C2 cubic spline in NED coordinates, parameterized by arc length
/// psi in meters on a uniform knot grid.
///
/// Built by fitting a chord-length cubic spline through the input samples,
/// measuring its arc length with adaptive Simpson quadrature, resampling at
/// uniform arc-length stations and refitting. The resampling is refined until
/// | |dr/dpsi| - 1 | stays within the requested tolerance.
///
/// Immutable after construction; every query is const and thread-safe.
class ArcLengthPath {
public:
    static constexpr double kDefaultCacheSpacing = 0.5;

    /// Throws ArgumentError for fewer than 4 samples or coincident
    /// consecutive samples.
    static ArcLengthPath build(const std::vector<Eigen::Vector3d>& samples, bool closed,
                               double speed_tolerance = 1e-3,
                               double cache_spacing = kDefaultCacheSpacing);

    [[nodiscard]] double total_length() const { return length_; }
    [[nodiscard]] bool closed() const { return closed_; }
    [[nodiscard]] double knot_spacing() const { return h_; }
    [[nodiscard]] double cache_spacing() const { return cache_spacing_; }

    /// Maps psi into [0, L) on closed paths. On open paths returns psi
    /// unchanged, throwing DomainError outside [0, L].
    [[nodiscard]] double wrap(double psi) const;

    [[nodiscard]] Eigen::Vector3d position(double psi) const;
    [[nodiscard]] PathDerivatives derivatives(double psi) const;
    [[nodiscard]] PathFrame frame_at(double psi) const;

    /// Dense-cache search refined by a 1-D minimization. Ties go to the
    /// smallest psi.
    [[nodiscard]] double closest_param_global(const Eigen::Vector3d& point) const;

    /// Minimizes distance over [hint - window, hint + window]; falls back to
    /// the global search if the minimum lands on the window boundary.
    [[nodiscard]] double closest_param_local(const Eigen::Vector3d& point, double hint,
                                             double window) const;

    /// Largest | |dr/dpsi| - 1 | over `probes` evenly spaced parameters.
    [[nodiscard]] double max_speed_deviation(int probes) const;

    /// Smallest radius of curvature over `probes` evenly spaced parameters.
    [[nodiscard]] double min_curvature_radius(int probes) const;

    /// Positions at uniform arc-length spacing (closed paths omit the
    /// duplicate endpoint).
    [[nodiscard]] std::vector<Eigen::Vector3d> sample(double spacing) const;

    /// Second-derivative jump at interior knots (zero up to round-off).
    [[nodiscard]] double max_second_derivative_jump() const;

private:
    // Per-segment coefficients, r(u) = c0 + c1 u + c2 u^2 + c3 u^3.
    using Segment = std::array<Eigen::Vector3d, 4>;

    [[nodiscard]] std::pair<int, double> locate(double psi) const;
    [[nodiscard]] double refine(const Eigen::Vector3d& point, double lo, double hi, double start) const;
    [[nodiscard]] double distance_sq(const Eigen::Vector3d& point, double psi) const;

    std::vector<Segment> segments_;
    double h_ = 1.0;
    double length_ = 0.0;
    bool closed_ = false;
    double cache_spacing_ = kDefaultCacheSpacing;
    std::vector<Eigen::Vector3d> cache_;
};

struct LissajousSpec {
    double amp_n = 100.0;
    double amp_e = 100.0;
    double amp_d = 0.0;
    int freq_n = 1;
    int freq_e = 2;
    int freq_d = 1;
    double phase = 0.0;  // rad, applied to the north channel
    double alt_offset = 100.0;  // m above the origin
    int samples = 2000;
};

/// Closed Lissajous loop:
///   n = amp_n sin(freq_n t + phase), e = amp_e sin(freq_e t),
///   d = -(alt_offset + amp_d cos(freq_d t)),  t in [0, 2 pi).
[[nodiscard]] ArcLengthPath lissajous_path(const LissajousSpec& spec);

/// Generator settings of the shipped test paths.
[[nodiscard]] LissajousSpec lissajous_preset(const std::string& name);
[[nodiscard]] const std::vector<std::string>& preset_names();

/// Plain-text n e d table, one point per line; '#' starts a comment.
[[nodiscard]] std::vector<Eigen::Vector3d> read_path_table(std::istream& in);
[[nodiscard]] std::vector<Eigen::Vector3d> read_path_table_file(const std::string& filename);
void write_path_table(std::ostream& out, const ArcLengthPath& path, double spacing);

}  // namespace fwmpc
