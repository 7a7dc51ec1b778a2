#pragma once

// Synthetic drive recordings.
//
// The marker layout below is synthetic: 13 markers on a gently curved
// windshield (ids 1-13) plus mirrors, instrument panel, console and side
// windows (ids 14-21). Coordinates are meters in the vehicle frame with the
// nominal head position at the origin (+z forward, +x to the driver's left, +y up).
//
// Generative model, per frame looking at marker m with direction angles g_m:
//   eye lead         psi(h) = h / kappa + lead * tanh(h / lead_width)   (per angle)
//   head yaw/pitch   h     = psi^-1(g_m) + N(0, tau^2),  tau = tau0 + tau1 |g_m|
//   head roll              ~ N(0, roll_std^2)
//   head sway        s     ~ N(0, diag(sway_std)^2)
//   gaze mean        mu    = psi(h) + G s
//   target gaze      g     = mu + N(0, sigma^2),  sigma = scale_phase (sigma0 + sigma1 |psi(h)|)
//   measured pose    R     = R_bias(driver) * R(h, roll),  p = offset(driver) + s
// where G maps sway to gaze: theta += gx sx + gz sz, phi += gy sy + gz sz.
// The conditional law of the target given the measured pose is therefore a
// known independent Gaussian, exposed by GeneratorTruth.

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/geometry.hpp"

namespace gazemap {

namespace detail {
inline Vec3 windshield_surface(double x, double y) {
  const double bend = (x - 0.2) / 0.7;
  return {x, y, 0.86 - 0.45 * y - 0.10 * bend * bend};
}
}  // namespace detail

/// Synthetic 3D marker positions, index k holds marker id k + 1.
inline const std::array<Vec3, kMarkerCount>& marker_layout() {
  using detail::windshield_surface;
  // Written with +x to the driver's right, mirrored below.
  static const std::array<Vec3, kMarkerCount> layout = [] {
    std::array<Vec3, kMarkerCount> raw = {
      windshield_surface(-0.40, 0.25), windshield_surface(0.00, 0.25),
      windshield_surface(0.40, 0.25),  windshield_surface(0.80, 0.25),
      windshield_surface(-0.50, 0.08), windshield_surface(-0.20, 0.08),
      windshield_surface(0.15, 0.08),  windshield_surface(0.50, 0.08),
      windshield_surface(0.85, 0.08),  windshield_surface(-0.40, -0.08),
      windshield_surface(0.00, -0.08), windshield_surface(0.40, -0.08),
      windshield_surface(0.80, -0.08),
      Vec3(0.30, 0.30, 0.60),    // 14 rear-view mirror
      Vec3(-0.75, -0.05, 0.55),  // 15 left side mirror
      Vec3(1.40, -0.05, 0.70),   // 16 right side mirror
      Vec3(0.00, -0.30, 0.60),   // 17 instrument panel
      Vec3(0.45, -0.40, 0.55),   // 18 center console
      Vec3(-0.80, 0.05, 0.15),   // 19 left window
      Vec3(1.20, 0.05, 0.25),    // 20 right window
      Vec3(0.35, -0.60, 0.30),   // 21 gear shift
    };
    for (auto& p : raw) p.x() = -p.x();
    return raw;
  }();
  return layout;
}

inline Eigen::Vector2d marker_angles(int marker_id) {
  require(marker_id >= 1 && marker_id <= kMarkerCount, ErrorKind::argument, "marker id outside 1..21");
  return direction_angles(marker_layout()[static_cast<std::size_t>(marker_id - 1)]);
}

struct SynthSpec {
  int drivers = 16;
  int frames_per_marker = 30;
  double kappa = 0.6;
  double lead = 0.0;        // extra eye rotation for small head turns, rad
  double lead_width = 0.1;  // head angle over which the eye lead saturates, rad
  double sigma0 = 0.02;
  double sigma1 = 0.05;
  double head_scatter0 = 0.03;
  double head_scatter1 = 0.05;
  double roll_std = 0.03;
  Vec3 sway_std = Vec3(0.03, 0.02, 0.02);
  Vec3 position_gain = Vec3(-1.2, -1.2, 0.1);
  double orientation_bias_deg = 3.0;
  double position_offset_std = 0.03;
  double parked_noise_scale = 0.8;
  std::vector<Phase> phases = {Phase::driving};
};

inline void validate(const SynthSpec& s) {
  require(s.drivers >= 1 && s.drivers <= 999, ErrorKind::argument, "synth: drivers must be in 1..999");
  require(s.frames_per_marker >= 1, ErrorKind::argument, "synth: frames_per_marker must be >= 1");
  require(s.kappa > 0.0 && s.kappa <= 1.0, ErrorKind::argument, "synth: kappa must be in (0, 1]");
  require(s.lead >= 0.0 && s.lead_width > 0.0, ErrorKind::argument, "synth: lead >= 0 and lead_width > 0 required");
  require(s.sigma0 >= 0.0 && s.sigma1 >= 0.0, ErrorKind::argument, "synth: noise terms must be >= 0");
  require(s.head_scatter0 >= 0.0 && s.head_scatter1 >= 0.0 && s.roll_std >= 0.0, ErrorKind::argument,
          "synth: head scatter terms must be >= 0");
  require((s.sway_std.array() >= 0.0).all() && s.sway_std.allFinite() && s.position_gain.allFinite(),
          ErrorKind::argument, "synth: sway/gain must be finite and sway >= 0");
  require(s.orientation_bias_deg >= 0.0 && s.position_offset_std >= 0.0 && s.parked_noise_scale > 0.0,
          ErrorKind::argument, "synth: bias/offset/scale out of range");
  require(!s.phases.empty(), ErrorKind::argument, "synth: at least one phase required");
}

/// Key=value config (one per line, '#' comments). Vector keys take three
/// comma-separated numbers; `phases` takes comma-separated phase names.
inline SynthSpec parse_synth_config(std::istream& is, SynthSpec spec = {}) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::parse, "synth config line " + std::to_string(line_no) + ": " + what, line_no);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) fail("expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto number = [&](const std::string& text) {
      try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) fail("bad number '" + text + "'");
        return v;
      } catch (const std::logic_error&) {
        fail("bad number '" + text + "'");
      }
      return 0.0;
    };
    auto list = [&](const std::string& text) {
      std::vector<std::string> items;
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) items.push_back(trim(item));
      return items;
    };
    auto vec3 = [&](const std::string& text) {
      auto items = list(text);
      if (items.size() != 3) fail("expected three comma-separated numbers for '" + key + "'");
      return Vec3(number(items[0]), number(items[1]), number(items[2]));
    };
    if (key == "drivers") spec.drivers = static_cast<int>(number(value));
    else if (key == "frames_per_marker") spec.frames_per_marker = static_cast<int>(number(value));
    else if (key == "kappa") spec.kappa = number(value);
    else if (key == "lead") spec.lead = number(value);
    else if (key == "lead_width") spec.lead_width = number(value);
    else if (key == "sigma0") spec.sigma0 = number(value);
    else if (key == "sigma1") spec.sigma1 = number(value);
    else if (key == "head_scatter0") spec.head_scatter0 = number(value);
    else if (key == "head_scatter1") spec.head_scatter1 = number(value);
    else if (key == "roll_std") spec.roll_std = number(value);
    else if (key == "sway_std") spec.sway_std = vec3(value);
    else if (key == "position_gain") spec.position_gain = vec3(value);
    else if (key == "orientation_bias_deg") spec.orientation_bias_deg = number(value);
    else if (key == "position_offset_std") spec.position_offset_std = number(value);
    else if (key == "parked_noise_scale") spec.parked_noise_scale = number(value);
    else if (key == "phases") {
      spec.phases.clear();
      for (const auto& name : list(value)) {
        auto p = parse_phase(name);
        if (!p) fail("unknown phase '" + name + "'");
        spec.phases.push_back(*p);
      }
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

/// Per-driver nuisance parameters: headband placement and seat position.
struct DriverProfile {
  std::string driver_id;
  Mat3 orientation_bias = Mat3::Identity();
  Vec3 position_offset = Vec3::Zero();
};

inline std::string synth_driver_id(int index) {
  std::string digits = std::to_string(index + 1);
  return "D" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

namespace detail {
inline std::mt19937_64 driver_engine(std::uint64_t seed, int driver, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(driver), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}
}  // namespace detail

inline std::vector<DriverProfile> driver_profiles(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::vector<DriverProfile> profiles;
  for (int d = 0; d < spec.drivers; ++d) {
    auto rng = detail::driver_engine(seed, d, 0);
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    const double angle = deg2rad(spec.orientation_bias_deg) * unit(rng);
    DriverProfile p{synth_driver_id(d), Mat3::Identity(), Vec3::Zero()};
    if (axis.norm() > 0.0) p.orientation_bias = axis_angle(axis, angle).toRotationMatrix();
    p.position_offset = Vec3(unit(rng), unit(rng), unit(rng)) * spec.position_offset_std;
    profiles.push_back(p);
  }
  return profiles;
}

namespace detail {
inline double phase_scale(const SynthSpec& spec, Phase phase) {
  return phase == Phase::parked ? spec.parked_noise_scale : 1.0;
}

inline double eye_lead(const SynthSpec& spec, double h) {
  return h / spec.kappa + spec.lead * std::tanh(h / spec.lead_width);
}

inline Eigen::Vector2d eye_lead(const SynthSpec& spec, const Eigen::Vector2d& h) {
  return {eye_lead(spec, h.x()), eye_lead(spec, h.y())};
}

/// Head angle whose eye-lead gaze is g (psi is strictly increasing).
inline double eye_lead_inverse(const SynthSpec& spec, double g) {
  double lo = -kPi, hi = kPi;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eye_lead(spec, mid) < g ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline Eigen::Vector2d gaze_mean(const SynthSpec& spec, const Eigen::Vector2d& head_angles,
                                 const Vec3& sway) {
  const Vec3& g = spec.position_gain;
  return eye_lead(spec, head_angles) +
         Eigen::Vector2d(g.x() * sway.x() + g.z() * sway.z(), g.y() * sway.y() + g.z() * sway.z());
}

inline double gaze_sigma(const SynthSpec& spec, Phase phase, const Eigen::Vector2d& head_angles) {
  return phase_scale(spec, phase) * (spec.sigma0 + spec.sigma1 * eye_lead(spec, head_angles).norm());
}
}  // namespace detail

/// Deterministic given (spec, seed). Records are ordered by driver, phase,
/// marker and frame; frame_index counts per (driver, phase).
inline std::vector<DriveRecord> synthesize(const SynthSpec& spec, std::uint64_t seed) {
  const auto profiles = driver_profiles(spec, seed);
  std::vector<DriveRecord> records;
  records.reserve(static_cast<std::size_t>(spec.drivers) * spec.phases.size() * kMarkerCount *
                  static_cast<std::size_t>(spec.frames_per_marker));
  for (int d = 0; d < spec.drivers; ++d) {
    const auto& profile = profiles[static_cast<std::size_t>(d)];
    for (std::size_t ph = 0; ph < spec.phases.size(); ++ph) {
      const Phase phase = spec.phases[ph];
      auto rng = detail::driver_engine(seed, d, 1 + static_cast<std::uint64_t>(phase));
      std::normal_distribution<double> unit(0.0, 1.0);
      long frame = 0;
      for (int m = 1; m <= kMarkerCount; ++m) {
        const Eigen::Vector2d target = marker_angles(m);
        const double tau = spec.head_scatter0 + spec.head_scatter1 * target.norm();
        const Eigen::Vector2d nominal(detail::eye_lead_inverse(spec, target.x()),
                                      detail::eye_lead_inverse(spec, target.y()));
        for (int f = 0; f < spec.frames_per_marker; ++f) {
          const Eigen::Vector2d head(nominal.x() + tau * unit(rng), nominal.y() + tau * unit(rng));
          const double roll = spec.roll_std * unit(rng);
          const Vec3 sway(spec.sway_std.x() * unit(rng), spec.sway_std.y() * unit(rng),
                          spec.sway_std.z() * unit(rng));
          const Eigen::Vector2d mean = detail::gaze_mean(spec, head, sway);
          const double sigma = detail::gaze_sigma(spec, phase, head);
          const double theta = mean.x() + sigma * unit(rng);
          const double phi = mean.y() + sigma * unit(rng);

          DriveRecord r;
          r.driver_id = profile.driver_id;
          r.phase = phase;
          r.frame_index = frame++;
          r.head.position = profile.position_offset + sway;
          r.head.orientation =
              angles_from_rotation(profile.orientation_bias * rotation_from_angles(head.x(), head.y(), roll));
          r.target_gaze = {std::clamp(theta, -kPi, kPi), std::clamp(phi, -kPi / 2.0, kPi / 2.0)};
          r.marker_id = m;
          records.push_back(std::move(r));
        }
      }
    }
  }
  return records;
}

/// The generating conditional law of the target gaze given a raw (not
/// normalized) synthetic record's head pose.
class GeneratorTruth {
 public:
  GeneratorTruth(SynthSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    for (auto& p : driver_profiles(spec_, seed)) profiles_.emplace(p.driver_id, p);
  }

  GazeDistribution predict(const DriveRecord& record) const {
    auto it = profiles_.find(record.driver_id);
    require(it != profiles_.end(), ErrorKind::argument, "unknown synthetic driver '" + record.driver_id + "'");
    const auto& profile = it->second;
    const Vec3 sway = record.head.position - profile.position_offset;
    const Vec3 angles = angles_from_rotation(profile.orientation_bias.transpose() * record.head.rotation());
    const Eigen::Vector2d head(angles.x(), angles.y());
    const Eigen::Vector2d mean = detail::gaze_mean(spec_, head, sway);
    const double sigma = detail::gaze_sigma(spec_, record.phase, head);
    const double var = std::max(sigma * sigma, 1e-300);
    return {{mean.x(), var}, {mean.y(), var}};
  }

 private:
  SynthSpec spec_;
  std::map<std::string, DriverProfile> profiles_;
};

}  // namespace gazemap
