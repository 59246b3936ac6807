#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqs {

inline constexpr double vacuum_permeability = 4.0e-7 * std::numbers::pi;  // H/m
inline constexpr double vacuum_reluctivity = 1.0 / vacuum_permeability;   // m/H

struct SaturationViolation {
  double b_lo = 0.0;
  double b_hi = 0.0;
  std::string what;
};

struct SaturationReport {
  std::vector<SaturationViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Magnetic material law H(B) with reluctivity nu(B) = H(B)/B. Three shapes:
//   - brauer:  H(B) = (k1 e^{k2 B^2} + k3) B, reluctivity clamped at the
//     vacuum value once the exponential overshoots it (the fit is only
//     meaningful below full saturation);
//   - table:   piecewise-linear monotone (B, H) knots, extrapolated beyond the
//     last knot with slope 1/mu0;
//   - constant: fixed reluctivity (linear material).
class BHCurve {
 public:
  static BHCurve brauer(double k1, double k2, double k3) {
    if (k1 < 0 || k2 < 0 || k3 <= 0) throw std::invalid_argument("BHCurve::brauer: coefficients must be positive");
    BHCurve c;
    c.kind_ = Kind::Brauer;
    c.k_ = {k1, k2, k3};
    return c;
  }

  static BHCurve linear(double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("BHCurve::linear: reluctivity must be positive");
    if (nu > vacuum_reluctivity * (1.0 + 1e-12))
      throw std::invalid_argument("BHCurve::linear: reluctivity above the vacuum value");
    BHCurve c;
    c.kind_ = Kind::Constant;
    c.nu_const_ = nu;
    return c;
  }

  // knots as (B, H); a missing origin knot is implied
  static BHCurve from_table(std::vector<std::array<double, 2>> knots) {
    if (knots.empty()) throw std::invalid_argument("BHCurve::from_table: empty table");
    if (knots.front()[0] > 0.0) knots.insert(knots.begin(), {0.0, 0.0});
    if (knots.front()[0] != 0.0 || knots.front()[1] != 0.0)
      throw std::invalid_argument("BHCurve::from_table: table must start at B=0, H=0");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i][0] > knots[i - 1][0]))
        throw std::invalid_argument("BHCurve::from_table: B values must be strictly increasing (knot " +
                                    std::to_string(i) + ")");
    if (knots.size() < 2) throw std::invalid_argument("BHCurve::from_table: need at least one nonzero knot");
    BHCurve c;
    c.kind_ = Kind::Table;
    c.knots_ = std::move(knots);
    return c;
  }

  // Two whitespace-separated columns "B H" per line, '#' starts a comment.
  static BHCurve from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open B-H table " + path);
    std::vector<std::array<double, 2>> knots;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double b = 0.0, h = 0.0;
      if (!(ls >> b)) continue;  // blank line
      if (!(ls >> h))
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two columns (B H)");
      knots.push_back({b, h});
    }
    if (knots.empty()) throw std::runtime_error(path + ": no data lines");
    return from_table(std::move(knots));
  }

  // nu(B) in m/H; defined and positive for all B >= 0
  double reluctivity(double b) const {
    if (b < 0.0) throw std::invalid_argument("BHCurve::reluctivity: negative flux density magnitude");
    switch (kind_) {
      case Kind::Constant:
        return nu_const_;
      case Kind::Brauer: {
        const double nu = k_[0] * std::exp(k_[1] * b * b) + k_[2];
        return std::min(nu, vacuum_reluctivity);
      }
      case Kind::Table: {
        if (b == 0.0) {
          // limit H/B -> slope of the first segment
          return (knots_[1][1] - knots_[0][1]) / (knots_[1][0] - knots_[0][0]);
        }
        return field_strength(b) / b;
      }
    }
    return nu_const_;
  }

  double field_strength(double b) const {
    if (b < 0.0) throw std::invalid_argument("BHCurve::field_strength: negative flux density magnitude");
    switch (kind_) {
      case Kind::Constant:
        return nu_const_ * b;
      case Kind::Brauer:
        return reluctivity(b) * b;
      case Kind::Table: {
        if (b >= knots_.back()[0])
          return knots_.back()[1] + (b - knots_.back()[0]) * vacuum_reluctivity;
        std::size_t hi = 1;
        while (knots_[hi][0] < b) ++hi;
        const auto& p = knots_[hi - 1];
        const auto& q = knots_[hi];
        const double w = (b - p[0]) / (q[0] - p[0]);
        return p[1] + w * (q[1] - p[1]);
      }
    }
    return 0.0;
  }

  // true when nu depends on the field state (matrix updates are required)
  bool state_dependent() const { return kind_ != Kind::Constant; }

  // Samples H and nu on [0, b_max]; reports intervals where H fails to
  // increase or nu exceeds the vacuum reluctivity.
  SaturationReport saturation_check(double b_max = 3.0, int samples = 1000) const {
    SaturationReport report;
    double prev_b = 0.0;
    double prev_h = field_strength(0.0);
    for (int i = 1; i <= samples; ++i) {
      const double b = b_max * i / samples;
      const double h = field_strength(b);
      if (!(h > prev_h))
        report.violations.push_back({prev_b, b, "H(B) not increasing on this interval"});
      const double nu = reluctivity(b);
      if (nu > vacuum_reluctivity * (1.0 + 1e-12))
        report.violations.push_back({prev_b, b, "reluctivity exceeds the vacuum value"});
      prev_b = b;
      prev_h = h;
    }
    return report;
  }

 private:
  enum class Kind { Brauer, Table, Constant };
  Kind kind_ = Kind::Constant;
  std::array<double, 3> k_{};                    // Brauer coefficients
  double nu_const_ = vacuum_reluctivity;         // constant reluctivity
  std::vector<std::array<double, 2>> knots_;     // (B, H) table
};

}  // namespace mqs
