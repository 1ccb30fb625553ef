#pragma once

#include <algorithm>
#include <complex>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "blowup/embedding.hpp"
#include "blowup/systemfile.hpp"
#include "blowup/types.hpp"

namespace testutil {

inline std::string data_path(const std::string& rel) {
  return std::string(BLOWUP_DATA_DIR) + "/" + rel;
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "cannot open ", path);
  return nlohmann::json::parse(in);
}

// Golden values live in data/fixtures/<system>.json; tests read them from
// there instead of hard-coding numbers.
inline nlohmann::json fixtures(const std::string& system) {
  return load_json(data_path("fixtures/" + system + ".json")).at("fixtures");
}

inline double fx_num(const nlohmann::json& fixtures, const std::string& name) {
  return fixtures.at(name).at("value").get<double>();
}

inline blowup::Vector fx_vec(const nlohmann::json& fixtures, const std::string& name) {
  const auto& arr = fixtures.at(name).at("value");
  blowup::Vector v(static_cast<int>(arr.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

// (re, im) pair lists.
inline std::vector<std::complex<double>> fx_cvec(const nlohmann::json& fixtures,
                                                 const std::string& name) {
  std::vector<std::complex<double>> out;
  for (const auto& p : fixtures.at(name).at("value"))
    out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

inline blowup::SystemFile load_system(const std::string& name) {
  return blowup::load_system_file(data_path("systems/" + name + ".json"));
}

inline std::vector<std::complex<double>> sorted_complex(const blowup::ComplexVector& v) {
  std::vector<std::complex<double>> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

inline std::vector<std::complex<double>> sorted_complex(std::vector<std::complex<double>> v) {
  std::sort(v.begin(), v.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

// Greatest pointwise distance between two spectra as sorted multisets.
inline double spectrum_distance(const std::vector<std::complex<double>>& a,
                                const std::vector<std::complex<double>>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Random point on the horizon p2c = 1.
inline blowup::Vector random_horizon_point(const blowup::EmbeddingSpec& spec,
                                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  blowup::Vector x(spec.sig.n);
  for (;;) {
    for (int i = 0; i < spec.sig.n; ++i) x[i] = box(rng);
    if (blowup::p2c(spec, x) > 1e-10) break;
  }
  return blowup::project_to_horizon(spec, x);
}

}  // namespace testutil
