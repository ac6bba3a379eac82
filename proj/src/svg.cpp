#include "pdgplay/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pdgplay {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                "#9467bd", "#ff7f0e", "#17becf"};

struct Frame {
  double xmin, ymin, scale, height;
  double px(double x) const { return (x - xmin) * scale; }
  double py(double y) const { return height - (y - ymin) * scale; }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void polyline(std::ostringstream& os, const Frame& f,
              const std::vector<VehicleState>& pts, const std::string& layer,
              const std::string& color, double opacity, const char* dash) {
  os << "  <polyline class=\"" << layer << "\" fill=\"none\" stroke=\"" << color
     << "\" stroke-opacity=\"" << opacity << "\" stroke-width=\"2\"";
  if (dash) os << " stroke-dasharray=\"" << dash << "\"";
  os << " points=\"";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    os << (k ? " " : "") << f.px(pts[k].x) << "," << f.py(pts[k].y);
  }
  os << "\"/>\n";
}

}  // namespace

std::string render_svg(const Scenario& s, const JointProfile& plan,
                       double pixels_per_meter) {
  const std::vector<Trajectory> trajs = rollout_joint(s, plan);
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  auto add = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& t : trajs) for (const auto& st : t.states) add(st.x, st.y);
  for (const auto& h : s.histories) for (const auto& st : h) add(st.x, st.y);
  for (const auto& h : s.ground_truth) for (const auto& st : h) add(st.x, st.y);
  for (const auto& g : s.goals) if (g) add(g->x, g->y);
  const double margin = 3.0;
  xmin -= margin;
  ymin -= margin;
  xmax += margin;
  ymax += margin;
  const double w = (xmax - xmin) * pixels_per_meter;
  const double h = (ymax - ymin) * pixels_per_meter;
  const Frame f{xmin, ymin, pixels_per_meter, h};

  std::ostringstream os;
  os.precision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "  <title>" << escape(s.id) << "</title>\n"
     << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < s.agents(); ++i) {
    const std::string color = kPalette[i % 6];
    if (i < s.histories.size() && !s.histories[i].empty()) {
      std::vector<VehicleState> hist = s.histories[i];
      hist.push_back(s.initial_states[i]);
      polyline(os, f, hist, "history", color, 0.35, "4 3");
    }
    if (s.has_ground_truth()) {
      std::vector<VehicleState> gt{s.initial_states[i]};
      gt.insert(gt.end(), s.ground_truth[i].begin(), s.ground_truth[i].end());
      polyline(os, f, gt, "ground_truth", "#333333", 0.9, "6 3");
    }
    polyline(os, f, trajs[i].states, "plan", color, 1.0, nullptr);
    if (i < s.goals.size() && s.goals[i]) {
      const double gx = f.px(s.goals[i]->x), gy = f.py(s.goals[i]->y), r = 5.0;
      os << "  <path class=\"goal\" stroke=\"" << color << "\" stroke-width=\"2\" d=\"M"
         << gx - r << "," << gy - r << " L" << gx + r << "," << gy + r << " M" << gx - r
         << "," << gy + r << " L" << gx + r << "," << gy - r << "\"/>\n";
    }
    const VehicleState& end = trajs[i].states.back();
    const double th = end.theta;
    const double ex = f.px(end.x), ey = f.py(end.y), len = 9.0;
    // Screen y points down, so the heading is mirrored.
    const double ax = ex + len * std::cos(th), ay = ey - len * std::sin(th);
    const double lx = ex + 0.5 * len * std::cos(th + 2.5), ly = ey - 0.5 * len * std::sin(th + 2.5);
    const double rx = ex + 0.5 * len * std::cos(th - 2.5), ry = ey - 0.5 * len * std::sin(th - 2.5);
    os << "  <polygon class=\"arrow\" fill=\"" << color << "\" points=\"" << ax << ","
       << ay << " " << lx << "," << ly << " " << rx << "," << ry << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pdgplay
