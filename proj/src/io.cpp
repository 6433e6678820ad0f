#include "eit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace eit {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace

void write_grid_csv(const std::string& path, const std::vector<Vec2>& centers,
                    const std::vector<double>& values) {
  if (centers.size() != values.size())
    throw Error("grid csv: centers and values differ in length");
  std::ofstream out = open_output(path);
  out << "x,y,value\n";
  for (std::size_t k = 0; k < centers.size(); ++k)
    out << format_double(centers[k].x()) << ',' << format_double(centers[k].y()) << ','
        << format_double(values[k]) << '\n';
  finish_output(out, path);
}

GridCsv read_grid_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "x,y,value")
    throw Error("'" + path + "' is not a grid csv");

  GridCsv grid;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string fx, fy, fv;
    if (!std::getline(row, fx, ',') || !std::getline(row, fy, ',') ||
        !std::getline(row, fv))
      throw Error("malformed row in '" + path + "': " + line);
    try {
      grid.centers.emplace_back(std::stod(fx), std::stod(fy));
      grid.values.push_back(std::stod(fv));
    } catch (const std::exception&) {
      throw Error("malformed number in '" + path + "': " + line);
    }
  }
  const double np = std::sqrt(static_cast<double>(grid.values.size()));
  grid.np = static_cast<int>(std::lround(np));
  if (grid.np * grid.np != static_cast<int>(grid.values.size()))
    throw Error("'" + path + "' does not hold a square pixel grid");
  return grid;
}

void write_contour_csv(const std::string& path, const std::vector<Polyline>& polylines) {
  std::ofstream out = open_output(path);
  out << "polyline,x,y\n";
  for (std::size_t p = 0; p < polylines.size(); ++p)
    for (const Vec2& q : polylines[p].points)
      out << p << ',' << format_double(q.x()) << ',' << format_double(q.y()) << '\n';
  finish_output(out, path);
}

void write_history_csv(const std::string& path,
                       const std::vector<DescentRecord>& records) {
  std::ofstream out = open_output(path);
  out << "iter,J,dt,sigma1\n";
  for (const DescentRecord& r : records)
    out << r.iter << ',' << format_double(r.j_after) << ',' << format_double(r.dt)
        << ',' << format_double(r.sigma1) << '\n';
  finish_output(out, path);
}

void write_scan_csv(const std::string& path, const TestBallGrid& scan) {
  std::ofstream out = open_output(path);
  out << "x,y,marked\n";
  for (std::size_t k = 0; k < scan.balls.size(); ++k)
    out << format_double(scan.balls[k].center.x()) << ','
        << format_double(scan.balls[k].center.y()) << ','
        << (scan.marked[k] ? 1 : 0) << '\n';
  finish_output(out, path);

  const std::filesystem::path p(path);
  std::filesystem::path heat = p.parent_path() / (p.stem().string() + "_heat.csv");
  std::vector<Vec2> centers;
  std::vector<double> counts(scan.heat.begin(), scan.heat.end());
  centers.reserve(scan.heat.size());
  for (int j = 0; j < scan.heat_np; ++j)
    for (int i = 0; i < scan.heat_np; ++i)
      centers.emplace_back((i + 0.5) / scan.heat_np, (j + 0.5) / scan.heat_np);
  write_grid_csv(heat.string(), centers, counts);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out = open_output(path);
  out << content;
  finish_output(out, path);
}

}  // namespace eit
