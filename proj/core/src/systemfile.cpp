#include "blowup/systemfile.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace blowup {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& origin, const std::string& what) {
  throw schema_error(origin + ": " + what);
}

}  // namespace

namespace {

SystemFile parse_system_json_impl(const json& j, const std::string& origin);

}  // namespace

SystemFile parse_system_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(origin, e.what());
  }
  try {
    return parse_system_json_impl(j, origin);
  } catch (const json::exception& e) {
    // wrong value types and similar structural problems
    bad(origin, e.what());
  }
}

namespace {

SystemFile parse_system_json_impl(const json& j, const std::string& origin) {
  if (!j.is_object()) bad(origin, "top level must be an object");

  for (const char* key : {"name", "state", "alpha", "order_k", "qh", "res"})
    if (!j.contains(key)) bad(origin, std::string("missing required field '") + key + "'");

  SystemFile sf;
  sf.def.name = j.at("name").get<std::string>();

  if (!j.at("state").is_array() || j.at("state").empty())
    bad(origin, "'state' must be a nonempty array of identifiers");
  for (const auto& s : j.at("state")) sf.def.states.push_back(s.get<std::string>());
  const int n = static_cast<int>(sf.def.states.size());
  for (const auto& name : sf.def.states)
    if (name == "t") bad(origin, "'t' is the reserved time symbol and cannot name a state");

  if (!j.at("alpha").is_array() || static_cast<int>(j.at("alpha").size()) != n)
    bad(origin, "'alpha' must be an array of length " + std::to_string(n));
  std::vector<int> alpha;
  for (const auto& a : j.at("alpha")) {
    if (!a.is_number_integer() || a.get<long long>() < 0)
      bad(origin, "'alpha' entries must be nonnegative integers");
    alpha.push_back(a.get<int>());
  }
  double k = j.at("order_k").get<double>();
  try {
    sf.def.sig = QHSignature::make(alpha, k);
  } catch (const numeric_error& e) {
    bad(origin, e.what());
  }

  auto parse_rows = [&](const char* key, std::vector<Expr>& out) {
    const auto& arr = j.at(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
      bad(origin, std::string("'") + key + "' must be an array of " + std::to_string(n) +
                      " expression strings");
    for (int i = 0; i < n; ++i) {
      std::string src = arr[static_cast<std::size_t>(i)].get<std::string>();
      try {
        out.push_back(parse(src, sf.def.states));
      } catch (const parse_error& e) {
        bad(origin, std::string(key) + "[" + std::to_string(i) + "]: " + e.what());
      }
    }
  };
  parse_rows("qh", sf.def.f_qh);
  parse_rows("res", sf.def.f_res);

  if (j.contains("seeds")) {
    for (const auto& row : j.at("seeds")) {
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        bad(origin, "'seeds' rows must have length " + std::to_string(n));
      Vector Y(n);
      for (int i = 0; i < n; ++i) Y[i] = row[static_cast<std::size_t>(i)].get<double>();
      sf.seeds.push_back(std::move(Y));
    }
  }
  if (j.contains("t_grid")) {
    const auto& g = j.at("t_grid");
    if (!g.is_array() || g.size() != 3) bad(origin, "'t_grid' must be [start, stop, count]");
    sf.t_grid = TGrid{g[0].get<double>(), g[1].get<double>(), g[2].get<int>()};
    if (sf.t_grid->count < 0) bad(origin, "'t_grid' count must be nonnegative");
  }
  return sf;
}

}  // namespace

SystemFile load_system_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw schema_error(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_system_json(ss.str(), path);
}

}  // namespace blowup
