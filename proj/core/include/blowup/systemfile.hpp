#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blowup/system.hpp"
#include "blowup/types.hpp"

namespace blowup {

class schema_error : public std::runtime_error {
public:
  explicit schema_error(const std::string& what) : std::runtime_error(what) {}
};

struct TGrid {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
};

// A system-definition JSON file: name, state, alpha, order_k, qh, res,
// optional seeds for the balance search and an optional t grid.
struct SystemFile {
  SystemDef def;
  std::vector<Vector> seeds;
  std::optional<TGrid> t_grid;
};

SystemFile load_system_file(const std::string& path);
SystemFile parse_system_json(const std::string& text, const std::string& origin);

}  // namespace blowup
