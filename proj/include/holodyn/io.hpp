#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "holodyn/coding.hpp"
#include "holodyn/dynamics.hpp"
#include "holodyn/measures.hpp"
#include "holodyn/shift.hpp"

namespace holodyn::io {

using nlohmann::json;

// {"type":"bernoulli","weights":[...]} or
// {"type":"finite_range","memory":m,"alphabet":M,"log_table":[...row-major...]}
json potential_to_json(const shift::Potential& p);
shift::Potential potential_from_json(const json& j);

// {"type":"rational","num":[[re,im],...],"den":[[re,im],...]} (lowest degree
// first; flat [re,im,re,im,...] also accepted) or {"type":"product","f1":...,"f2":...}
json map_to_json(const dyn::Map& m);
dyn::Map map_from_json(const json& j);

std::string format_double(double x);  // shortest lossless, stable across runs

// CSV writers; every file begins with a header row.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_atomic_csv(const std::string& path, const meas::AtomicMeasure& m);
void write_cloud_csv(const std::string& path, const meas::SampleCloud& c);
void write_tree_level_csv(const std::string& path, const coding::CodingTree& tree, int level,
                          std::uint64_t cap = 4000000);
void write_grid_csv(const std::string& path, const meas::DensityGrid& g);
void write_pgm(const std::string& path, const meas::DensityGrid& g);  // P2, max 65535

void write_text(const std::string& path, const std::string& content);
json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

}  // namespace holodyn::io
