#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "levypide/field.hpp"

namespace levypide {

namespace {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

void write_field(const SpaceTimeField& field, const std::string& stem, bool forward_time) {
  const auto& space = field.space();
  const auto& time = field.time();
  const int d = space.dim();
  const int k = field.components();

  std::ofstream csv(stem + ".csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + stem + ".csv");
  std::vector<std::string> columns;
  for (int a = 0; a < d; ++a) columns.push_back("x" + std::to_string(a));
  for (int i = 0; i < time.nodes(); ++i) {
    for (int c = 0; c < k; ++c) columns.push_back("u" + std::to_string(c) + "_t" + std::to_string(i));
  }
  for (std::size_t j = 0; j < columns.size(); ++j) csv << (j ? "," : "") << columns[j];
  csv << '\n';
  std::vector<double> x(d);
  for (std::size_t n = 0; n < space.size(); ++n) {
    space.node(n, x);
    std::string row;
    for (int a = 0; a < d; ++a) row += (a ? "," : "") + format17(x[a]);
    for (int i = 0; i < time.nodes(); ++i) {
      for (int c = 0; c < k; ++c) row += "," + format17(field.at(i, n, c));
    }
    csv << row << '\n';
  }

  nlohmann::ordered_json header;
  header["format"] = "levypide-field";
  header["csv"] = base_name(stem) + ".csv";
  header["components"] = k;
  nlohmann::ordered_json axes = nlohmann::ordered_json::array();
  for (int a = 0; a < d; ++a) {
    axes.push_back({{"lower", space.lower(a)},
                    {"upper", space.upper(a)},
                    {"points", space.points(a)},
                    {"periodic", space.periodic(a)}});
  }
  header["space"] = axes;
  header["time"] = {{"horizon", time.horizon()}, {"dt", time.dt()}, {"steps", time.steps()}};
  header["time_view"] = forward_time ? "forward" : "backward";
  std::vector<double> labels;
  for (int i = 0; i < time.nodes(); ++i) labels.push_back(forward_time ? -time.time(i) : time.time(i));
  header["time_nodes"] = labels;
  header["columns"] = columns;
  header["row_order"] = "flat node index, axis 0 fastest";
  std::ofstream json(stem + ".json", std::ios::binary);
  if (!json) throw std::runtime_error("cannot write " + stem + ".json");
  json << header.dump(2) << '\n';
}

SpaceTimeField read_field(const std::string& stem) {
  std::ifstream json(stem + ".json");
  if (!json) throw std::runtime_error("cannot read " + stem + ".json");
  const auto header = nlohmann::json::parse(json);
  std::vector<double> lower, upper;
  std::vector<int> points;
  std::vector<bool> periodic;
  for (const auto& axis : header.at("space")) {
    lower.push_back(axis.at("lower").get<double>());
    upper.push_back(axis.at("upper").get<double>());
    points.push_back(axis.at("points").get<int>());
    periodic.push_back(axis.at("periodic").get<bool>());
  }
  const auto& t = header.at("time");
  TimeGrid time(t.at("horizon").get<double>(), t.at("dt").get<double>());
  SpaceTimeField field(SpaceGrid(lower, upper, points, periodic), time, header.at("components").get<int>());
  const int d = static_cast<int>(lower.size());
  const int k = field.components();

  std::ifstream csv(stem + ".csv");
  if (!csv) throw std::runtime_error("cannot read " + stem + ".csv");
  std::string line;
  std::getline(csv, line);
  for (std::size_t n = 0; n < field.space().size(); ++n) {
    if (!std::getline(csv, line)) throw std::runtime_error("field CSV has too few rows");
    const char* p = line.c_str();
    char* end = nullptr;
    auto next = [&]() {
      const double v = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("malformed field CSV row");
      p = *end == ',' ? end + 1 : end;
      return v;
    };
    for (int a = 0; a < d; ++a) next();
    for (int i = 0; i < time.nodes(); ++i) {
      for (int c = 0; c < k; ++c) field.at(i, n, c) = next();
    }
  }
  return field;
}

}  // namespace levypide
