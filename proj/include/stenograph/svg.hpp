#pragma once

// Minimal SVG emission for report figures. Numbers are printed with fixed
// precision so output is byte-stable.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stenograph/common.hpp"

namespace stenograph::svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Point {
  double x;
  double y;
};

class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, std::string_view stroke = "#000", double width = 1.0,
            std::string_view dash = {}) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + std::string(dash) + "\"";
    body_ += "/>\n";
  }

  void polyline(std::span<const Point> pts, std::string_view stroke, double width = 1.5) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) +
             "\" points=\"" + points(pts) + "\"/>\n";
  }

  void polygon(std::span<const Point> pts, std::string_view fill, double opacity) {
    if (pts.empty()) return;
    body_ += "<polygon fill=\"" + std::string(fill) + "\" fill-opacity=\"" + num(opacity) +
             "\" stroke=\"none\" points=\"" + points(pts) + "\"/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "none",
            double opacity = 1.0) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
             "\" fill=\"" + std::string(fill) + "\" fill-opacity=\"" + num(opacity) + "\" stroke=\"" +
             std::string(stroke) + "\"/>\n";
  }

  void circle(double cx, double cy, double r, std::string_view fill) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
             std::string(fill) + "\"/>\n";
  }

  void text(double x, double y, std::string_view s, double size = 12.0, std::string_view anchor = "start",
            std::string_view fill = "#000") {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" + num(size) +
             "\" text-anchor=\"" + std::string(anchor) + "\" fill=\"" + std::string(fill) + "\">" + escape(s) +
             "</text>\n";
  }

  std::string str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" + body_ + "</svg>\n";
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot write " + path.string());
    out << str();
  }

 private:
  static std::string points(std::span<const Point> pts) {
    std::string s;
    for (const auto& p : pts) {
      if (!s.empty()) s += ' ';
      s += num(p.x) + "," + num(p.y);
    }
    return s;
  }

  double width_;
  double height_;
  std::string body_;
};

// Rectangular plotting area mapping data coordinates to the page.
class Panel {
 public:
  Panel(Document& doc, double left, double top, double width, double height, double x0, double x1, double y0,
        double y1)
      : doc_(doc), left_(left), top_(top), width_(width), height_(height), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (x1_ == x0_) x1_ = x0_ + 1.0;
    if (y1_ == y0_) y1_ = y0_ + 1.0;
  }

  double px(double x) const { return left_ + (x - x0_) / (x1_ - x0_) * width_; }
  double py(double y) const { return top_ + height_ - (y - y0_) / (y1_ - y0_) * height_; }
  Point map(double x, double y) const { return {px(x), py(y)}; }

  void frame(std::string_view title, std::string_view xlabel = {}, std::string_view ylabel = {}, int ticks = 5) {
    doc_.rect(left_, top_, width_, height_, "none", "#444");
    doc_.text(left_ + width_ / 2, top_ - 6, title, 12, "middle");
    for (int i = 0; i <= ticks; ++i) {
      const double fx = x0_ + (x1_ - x0_) * i / ticks, fy = y0_ + (y1_ - y0_) * i / ticks;
      doc_.line(px(fx), top_ + height_, px(fx), top_ + height_ + 4, "#444");
      doc_.text(px(fx), top_ + height_ + 15, tick_label(fx), 9, "middle");
      doc_.line(left_ - 4, py(fy), left_, py(fy), "#444");
      doc_.text(left_ - 6, py(fy) + 3, tick_label(fy), 9, "end");
    }
    if (!xlabel.empty()) doc_.text(left_ + width_ / 2, top_ + height_ + 30, xlabel, 10, "middle");
    if (!ylabel.empty()) doc_.text(left_ - 34, top_ + height_ / 2, ylabel, 10, "middle");
  }

  void series(std::span<const double> xs, std::span<const double> ys, std::string_view color, double width = 1.5) {
    std::vector<Point> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back(map(xs[i], ys[i]));
    doc_.polyline(pts, color, width);
  }

  // Right-continuous step function.
  void steps(std::span<const double> xs, std::span<const double> ys, double x_end, std::string_view color) {
    std::vector<Point> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i > 0) pts.push_back(map(xs[i], ys[i - 1]));
      pts.push_back(map(xs[i], ys[i]));
    }
    if (!ys.empty()) pts.push_back(map(x_end, ys.back()));
    doc_.polyline(pts, color);
  }

  void band(std::span<const double> xs, std::span<const double> lo, std::span<const double> hi, std::string_view color,
            double opacity = 0.2) {
    std::vector<Point> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back(map(xs[i], hi[i]));
    for (std::size_t i = xs.size(); i-- > 0;) pts.push_back(map(xs[i], lo[i]));
    doc_.polygon(pts, color, opacity);
  }

  void diagonal() { doc_.line(px(x0_), py(y0_), px(x1_), py(y1_), "#999", 1.0, "4,3"); }

  Document& doc() { return doc_; }

 private:
  static std::string tick_label(double v) {
    char buf[32];
    if (std::abs(v) >= 100 || v == std::floor(v)) {
      std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
      std::snprintf(buf, sizeof buf, "%.2f", v);
    }
    return buf;
  }

  Document& doc_;
  double left_, top_, width_, height_;
  double x0_, x1_, y0_, y1_;
};

}  // namespace stenograph::svg
