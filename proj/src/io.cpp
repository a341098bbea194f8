#include "holodyn/io.hpp"

#include <cstdio>
#include <fstream>

#include "holodyn/errors.hpp"

namespace holodyn::io {

json potential_to_json(const shift::Potential& p) {
  json j;
  if (p.kind == shift::Potential::Kind::bernoulli) {
    j["type"] = "bernoulli";
    j["weights"] = p.weights;
  } else {
    j["type"] = "finite_range";
    j["memory"] = p.memory;
    j["alphabet"] = p.alphabet;
    j["log_table"] = p.log_table;
  }
  return j;
}

shift::Potential potential_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type"))
    throw error(errc::config, "potential: expected an object with a \"type\" field");
  const std::string type = j.at("type").get<std::string>();
  if (type == "bernoulli") {
    if (!j.contains("weights")) throw error(errc::config, "potential: missing \"weights\"");
    return shift::Potential::bernoulli(j.at("weights").get<std::vector<double>>());
  }
  if (type == "finite_range") {
    for (const char* f : {"memory", "alphabet", "log_table"})
      if (!j.contains(f)) throw error(errc::config, std::string("potential: missing \"") + f + "\"");
    return shift::Potential::finite_range(j.at("alphabet").get<int>(), j.at("memory").get<int>(),
                                          j.at("log_table").get<std::vector<double>>());
  }
  throw error(errc::config, "potential: unknown type \"" + type + "\"");
}

namespace {

json poly_to_json(const dyn::Poly& p) {
  json arr = json::array();
  for (const auto& c : p.c) arr.push_back(json::array({c.real(), c.imag()}));
  return arr;
}

dyn::Poly poly_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw error(errc::config, std::string("map: \"") + field + "\" must be an array");
  dyn::Poly p;
  if (!j.empty() && j[0].is_number()) {
    // Flat [re, im, re, im, ...]
    if (j.size() % 2 != 0)
      throw error(errc::config, std::string("map: flat \"") + field + "\" needs re,im pairs");
    for (std::size_t i = 0; i < j.size(); i += 2)
      p.c.emplace_back(j[i].get<double>(), j[i + 1].get<double>());
  } else {
    for (const auto& e : j) {
      if (!e.is_array() || e.size() != 2)
        throw error(errc::config, std::string("map: \"") + field + "\" entries must be [re, im]");
      p.c.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  return p;
}

}  // namespace

json map_to_json(const dyn::Map& m) {
  auto one = [](const dyn::RationalMap& f) {
    json j;
    j["type"] = "rational";
    j["num"] = poly_to_json(f.num());
    j["den"] = poly_to_json(f.den());
    return j;
  };
  if (m.k() == 1) return one(m.factor(0));
  json j;
  j["type"] = "product";
  j["f1"] = one(m.factor(0));
  j["f2"] = one(m.factor(1));
  return j;
}

dyn::Map map_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type"))
    throw error(errc::config, "map: expected an object with a \"type\" field");
  const std::string type = j.at("type").get<std::string>();
  if (type == "rational") {
    if (!j.contains("num") || !j.contains("den"))
      throw error(errc::config, "map: rational needs \"num\" and \"den\"");
    return dyn::Map::rational(
        dyn::RationalMap(poly_from_json(j.at("num"), "num"), poly_from_json(j.at("den"), "den")));
  }
  if (type == "product") {
    if (!j.contains("f1") || !j.contains("f2"))
      throw error(errc::config, "map: product needs \"f1\" and \"f2\"");
    const dyn::Map f1 = map_from_json(j.at("f1"));
    const dyn::Map f2 = map_from_json(j.at("f2"));
    if (f1.k() != 1 || f2.k() != 1)
      throw error(errc::config, "map: product factors must be rational maps");
    return dyn::Map::product(f1.factor(0), f2.factor(0));
  }
  throw error(errc::config, "map: unknown type \"" + type + "\"");
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);  // binary: identical bytes everywhere
  if (!f) throw error(errc::config, "cannot open for writing: " + path);
  return f;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto f = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_double(row[i]);
    f << "\n";
  }
}

namespace {

void point_columns(const dyn::Pt& p, std::vector<double>& row) {
  for (int f = 0; f < p.k; ++f) {
    const auto& s = p.factor(f);
    if (s.inf) {
      row.push_back(std::numeric_limits<double>::infinity());
      row.push_back(std::numeric_limits<double>::infinity());
    } else {
      row.push_back(s.z.real());
      row.push_back(s.z.imag());
    }
  }
}

std::vector<std::string> point_header(int k) {
  if (k == 1) return {"re", "im"};
  return {"re1", "im1", "re2", "im2"};
}

}  // namespace

void write_atomic_csv(const std::string& path, const meas::AtomicMeasure& m) {
  auto header = point_header(m.k);
  header.push_back("weight");
  std::vector<std::vector<double>> rows;
  rows.reserve(m.atoms.size());
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    std::vector<double> row;
    point_columns(m.atoms[i], row);
    row.push_back(m.w[i]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_cloud_csv(const std::string& path, const meas::SampleCloud& c) {
  std::vector<std::vector<double>> rows;
  rows.reserve(c.pts.size());
  for (const auto& p : c.pts) {
    std::vector<double> row;
    point_columns(p, row);
    rows.push_back(std::move(row));
  }
  write_csv(path, point_header(c.k), rows);
}

void write_tree_level_csv(const std::string& path, const coding::CodingTree& tree, int level,
                          std::uint64_t cap) {
  const std::uint64_t count = tree.level_size(level);
  if (count > cap) throw error(errc::config, "tree level exceeds export cap");
  auto f = open_out(path);
  const int M = tree.alphabet();
  f << "word";
  for (const auto& h : point_header(tree.map().k())) f << "," << h;
  f << ",path_diameter\n";
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!tree.node_ok(level, i)) continue;
    auto w = coding::CodingTree::unpack(i, level, M);
    f << shift::word_string(shift::Word(w.begin(), w.end()), M);
    std::vector<double> row;
    point_columns(tree.node(level, i), row);
    for (double v : row) f << "," << format_double(v);
    f << "," << format_double(tree.node_diameter(level, i)) << "\n";
  }
}

void write_grid_csv(const std::string& path, const meas::DensityGrid& g) {
  auto f = open_out(path);
  f << "ix,iy,x,y,mass\n";
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double x = g.x0 + (ix + 0.5) * (g.x1 - g.x0) / g.nx;
      const double y = g.y0 + (iy + 0.5) * (g.y1 - g.y0) / g.ny;
      f << ix << "," << iy << "," << format_double(x) << "," << format_double(y) << ","
        << format_double(g.mass[static_cast<std::size_t>(iy) * g.nx + ix]) << "\n";
    }
}

void write_pgm(const std::string& path, const meas::DensityGrid& g) {
  auto f = open_out(path);
  double mx = 0.0;
  for (double m : g.mass) mx = std::max(mx, m);
  f << "P2\n" << g.nx << " " << g.ny << "\n65535\n";
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double m = g.mass[static_cast<std::size_t>(iy) * g.nx + ix];
      const int v = mx > 0.0 ? static_cast<int>(std::lround(65535.0 * m / mx)) : 0;
      f << (ix ? " " : "") << v;
    }
    f << "\n";
  }
}

void write_text(const std::string& path, const std::string& content) {
  auto f = open_out(path);
  f << content;
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw error(errc::config, "cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw error(errc::config, "invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << "\n";
}

}  // namespace holodyn::io
