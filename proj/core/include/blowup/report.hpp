#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "blowup/correspondence.hpp"
#include "blowup/flow.hpp"
#include "blowup/systemfile.hpp"

namespace blowup {

using ordered_json = nlohmann::ordered_json;

struct ReportOptions {
  double t0 = 0.0;
  std::optional<Vector> x0;  // embedded coordinates
  std::optional<Vector> y0;  // original coordinates, embedded internally
  double h = 1e-3;
  double tau_max = 4000.0;
  std::uint64_t seed = 0;
};

struct ReportResult {
  bool converged = false;
  Trajectory traj;
  ordered_json json;
};

// End-to-end pipeline: integrate, locate the limiting equilibrium, run the
// balance/spectral/correspondence analysis at t = t_max, fit rates.
ReportResult run_report(const DesingField& df, const SystemFile& sf, const ReportOptions& opt);

// Correspondence analysis at a fixed t for every nontrivial balance root.
ordered_json correspond_at(const DesingField& df, const SystemFile& sf, double t,
                           std::uint64_t seed);

ordered_json spectral_report_json(const DesingField& df, const SpectralReport& rep);

ordered_json json_complex(const std::complex<double>& z);
ordered_json json_vector(const Vector& v);
ordered_json json_cvector(const ComplexVector& v);
ordered_json json_matrix(const Matrix& m);

}  // namespace blowup
