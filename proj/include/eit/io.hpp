#pragma once

#include <string>
#include <vector>

#include "eit/levelset.hpp"
#include "eit/monotonicity.hpp"

namespace eit {

// shortest round-trip decimal representation
std::string format_double(double v);

struct GridCsv {
  int np = 0;
  std::vector<Vec2> centers;   // row-major pixel centers
  std::vector<double> values;
};

// rows "x,y,value" over the row-major centers of an np x np pixel grid
void write_grid_csv(const std::string& path, const std::vector<Vec2>& centers,
                    const std::vector<double>& values);
GridCsv read_grid_csv(const std::string& path);

// rows "polyline,x,y"
void write_contour_csv(const std::string& path, const std::vector<Polyline>& polylines);

// rows "iter,J,dt,sigma1"
void write_history_csv(const std::string& path, const std::vector<DescentRecord>& records);

// rows "x,y,marked" at ball centers plus a pixel heat-map companion
void write_scan_csv(const std::string& path, const TestBallGrid& scan);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace eit
