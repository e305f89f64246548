#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "softts/errors.hpp"
#include "softts/reporting.hpp"
#include "softts/text_io.hpp"

namespace softts {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

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

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

struct Svg {
  std::ostringstream body;
  double width, height;
  Svg(double w, double h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2, const std::string& style = "stroke:#000;stroke-width:1") {
    body << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
         << "\" style=\"" << style << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "middle", int size = 12) {
    body << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size << "\" text-anchor=\"" << anchor
         << "\" font-family=\"sans-serif\">" << escape(s) << "</text>\n";
  }
  void circle(double x, double y, double r, const std::string& fill, const std::string& cls = "") {
    body << "<circle";
    if (!cls.empty()) body << " class=\"" << cls << "\"";
    body << " cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
         << "\" fill=\"" << fill << "\"/>\n";
  }
  std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
       << body.str() << "</svg>\n";
    return os.str();
  }
};

void save(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  write_file_atomic(path, content);
}

}  // namespace

std::string cd_diagram_svg(const std::vector<RankReport>& reports) {
  const double panel_h = 60.0;
  double total_h = 20.0;
  for (const auto& r : reports) total_h += panel_h + 22.0 * double(r.methods.size()) + 12.0 * double(r.cliques.size());
  Svg svg(640.0, total_h);
  const double left = 140.0, right = 500.0;
  double top = 20.0;
  for (const auto& r : reports) {
    const std::size_t k = r.methods.size();
    const auto x_of = [&](double rank) {
      return k > 1 ? left + (right - left) * (rank - 1.0) / double(k - 1) : 0.5 * (left + right);
    };
    svg.text(12.0, top + 4.0, r.model + "  (Friedman p=" + num(r.friedman_p) + ")", "start", 13);
    const double axis_y = top + 30.0;
    svg.line(left, axis_y, right, axis_y);
    for (std::size_t t = 1; t <= k; ++t) {
      svg.line(x_of(double(t)), axis_y - 5.0, x_of(double(t)), axis_y);
      svg.text(x_of(double(t)), axis_y - 8.0, std::to_string(t), "middle", 10);
    }

    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.average_ranks[a] < r.average_ranks[b]; });

    double bar_y = axis_y + 8.0;
    for (const auto& clique : r.cliques) {
      double lo = 1e300, hi = -1e300;
      for (const auto& m : clique) {
        const auto it = std::find(r.methods.begin(), r.methods.end(), m);
        const double x = x_of(r.average_ranks[std::size_t(it - r.methods.begin())]);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      svg.body << "<line class=\"clique\" x1=\"" << num(lo - 3.0) << "\" y1=\"" << num(bar_y) << "\" x2=\""
               << num(hi + 3.0) << "\" y2=\"" << num(bar_y) << "\" style=\"stroke:#000;stroke-width:4\"/>\n";
      bar_y += 12.0;
    }

    double label_y = bar_y + 14.0;
    for (std::size_t idx = 0; idx < k; ++idx) {
      const std::size_t j = order[idx];
      const double x = x_of(r.average_ranks[j]);
      const bool left_side = idx < (k + 1) / 2;
      const double end_x = left_side ? left - 10.0 : right + 10.0;
      svg.body << "<polyline class=\"method\" points=\"" << num(x) << ',' << num(axis_y) << ' ' << num(x) << ','
               << num(label_y) << ' ' << num(end_x) << ',' << num(label_y)
               << "\" style=\"fill:none;stroke:#444;stroke-width:1\"/>\n";
      svg.text(left_side ? end_x - 4.0 : end_x + 4.0, label_y + 4.0,
               r.methods[j] + " (" + num(r.average_ranks[j]) + ")", left_side ? "end" : "start", 11);
      label_y += 22.0;
    }
    top += panel_h + 22.0 * double(k) + 12.0 * double(r.cliques.size());
  }
  return svg.str();
}

std::string scatter_svg(const std::vector<ScatterPoint>& points, const std::string& model,
                        const std::string& method_label, const std::string& baseline_label) {
  const double size = 400.0, margin = 60.0;
  Svg svg(size + 2 * margin, size + 2 * margin);
  const auto px = [&](double v) { return margin + v * size; };
  const auto py = [&](double v) { return margin + (1.0 - v) * size; };
  svg.text(margin + size / 2, 30.0, model + ": " + method_label + " vs " + baseline_label, "middle", 14);
  svg.line(px(0), py(0), px(1), py(0));
  svg.line(px(0), py(0), px(0), py(1));
  svg.body << "<line class=\"diagonal\" x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(1))
           << "\" y2=\"" << num(py(1)) << "\" style=\"stroke:#888;stroke-dasharray:4 3\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    svg.line(px(v), py(0), px(v), py(0) + 4);
    svg.text(px(v), py(0) + 16, num(v), "middle", 10);
    svg.line(px(0) - 4, py(v), px(0), py(v));
    svg.text(px(0) - 6, py(v) + 3, num(v), "end", 10);
  }
  svg.text(margin + size / 2, size + 2 * margin - 15, baseline_label + " accuracy");
  svg.body << "<text x=\"15\" y=\"" << num(margin + size / 2) << "\" font-size=\"12\" text-anchor=\"middle\" "
           << "font-family=\"sans-serif\" transform=\"rotate(-90 15 " << num(margin + size / 2) << ")\">"
           << escape(method_label) << " accuracy</text>\n";
  for (const auto& p : points) {
    const char* color = p.method > p.baseline ? "#2ca02c" : (p.method < p.baseline ? "#d62728" : "#1f77b4");
    svg.body << "<circle class=\"point\" cx=\"" << num(px(p.baseline)) << "\" cy=\"" << num(py(p.method))
             << "\" r=\"4\" fill=\"" << color << "\"><title>" << escape(p.dataset) << "</title></circle>\n";
  }
  return svg.str();
}

std::string tsne_svg(const std::vector<TsnePanel>& panels) {
  const double panel = 320.0, pad = 20.0, legend_h = 24.0;
  Svg svg(pad + double(panels.size()) * (panel + pad), panel + 2 * pad + legend_h + 20.0);
  std::set<int> classes;
  for (const auto& pnl : panels) classes.insert(pnl.labels.begin(), pnl.labels.end());
  const std::vector<int> class_list(classes.begin(), classes.end());
  const auto color_of = [&](int label) {
    return palette(std::size_t(std::lower_bound(class_list.begin(), class_list.end(), label) - class_list.begin()));
  };

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& pnl = panels[pi];
    const double x0 = pad + double(pi) * (panel + pad), y0 = pad + 20.0;
    svg.text(x0 + panel / 2, pad + 8.0, pnl.title, "middle", 13);
    svg.body << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(panel) << "\" height=\""
             << num(panel) << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (std::size_t i = 0; i < pnl.coords.rows; ++i) {
      xmin = std::min(xmin, pnl.coords(i, 0));
      xmax = std::max(xmax, pnl.coords(i, 0));
      ymin = std::min(ymin, pnl.coords(i, 1));
      ymax = std::max(ymax, pnl.coords(i, 1));
    }
    const double sx = xmax > xmin ? (panel - 20.0) / (xmax - xmin) : 1.0;
    const double sy = ymax > ymin ? (panel - 20.0) / (ymax - ymin) : 1.0;
    for (std::size_t i = 0; i < pnl.coords.rows; ++i) {
      svg.circle(x0 + 10.0 + (pnl.coords(i, 0) - xmin) * sx, y0 + panel - 10.0 - (pnl.coords(i, 1) - ymin) * sy, 2.5,
                 color_of(pnl.labels[i]), "point");
    }
  }

  double lx = pad;
  const double ly = pad + 20.0 + panel + 20.0;
  for (int label : class_list) {
    svg.body << "<g class=\"legend-entry\">";
    svg.rect(lx, ly - 9.0, 10.0, 10.0, color_of(label));
    svg.text(lx + 14.0, ly, "class " + std::to_string(label), "start", 11);
    svg.body << "</g>\n";
    lx += 70.0;
  }
  return svg.str();
}

void write_cd_diagram(const std::vector<RankReport>& reports, const std::filesystem::path& path) {
  save(path, cd_diagram_svg(reports));
}

void write_scatter(const std::vector<ScatterPoint>& points, const std::string& model, const std::filesystem::path& path,
                   const std::string& method_label, const std::string& baseline_label) {
  save(path, scatter_svg(points, model, method_label, baseline_label));
}

void write_tsne(const std::vector<TsnePanel>& panels, const std::filesystem::path& svg_path,
                const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv << "panel,index,x,y,label\n";
  for (const auto& pnl : panels) {
    if (pnl.coords.rows != pnl.labels.size() || pnl.coords.cols != 2) {
      throw DimensionError("t-SNE panel '" + pnl.title + "' has mismatched coordinates and labels");
    }
    for (std::size_t i = 0; i < pnl.coords.rows; ++i) {
      csv << pnl.title << ',' << i << ',' << format_double(pnl.coords(i, 0)) << ','
          << format_double(pnl.coords(i, 1)) << ',' << pnl.labels[i] << '\n';
    }
  }
  save(csv_path, csv.str());
  save(svg_path, tsne_svg(panels));
}

}  // namespace softts
