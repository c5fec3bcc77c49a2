#include "pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace como::pipeline::svg {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

std::string open(const std::string& title, double h = kH)
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(h) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           "<text x=\"" + num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
}

struct Axes {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
    double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

Axes fit_axes(const std::vector<double>& x, const std::vector<double>& y)
{
    Axes a{0, 1, 0, 1};
    if (x.empty()) return a;
    const auto [xl, xh] = std::minmax_element(x.begin(), x.end());
    const auto [yl, yh] = std::minmax_element(y.begin(), y.end());
    auto pad = [](double lo, double hi, double& o0, double& o1) {
        const double span = hi > lo ? hi - lo : 1.0;
        o0 = lo - 0.05 * span;
        o1 = hi + 0.05 * span;
    };
    pad(*xl, *xh, a.x0, a.x1);
    pad(*yl, *yh, a.y0, a.y1);
    return a;
}

std::string frame(const Axes& a, const std::string& xl, const std::string& yl, bool log_ticks)
{
    std::string s = "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kW - kLeft - kRight) +
                    "\" height=\"" + num(kH - kTop - kBottom) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double vx = a.x0 + (a.x1 - a.x0) * i / 4.0, vy = a.y0 + (a.y1 - a.y0) * i / 4.0;
        s += "<text x=\"" + num(a.px(vx)) + "\" y=\"" + num(kH - kBottom + 15) + "\" text-anchor=\"middle\">" +
             tick(log_ticks ? std::exp(vx) : vx) + "</text>\n";
        s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(a.py(vy) + 4) + "\" text-anchor=\"end\">" +
             tick(log_ticks ? std::exp(vy) : vy) + "</text>\n";
    }
    s += "<text x=\"" + num(kLeft + (kW - kLeft - kRight) / 2) + "\" y=\"" + num(kH - 12) +
         "\" text-anchor=\"middle\">" + escape(xl) + "</text>\n";
    s += "<text transform=\"translate(16," + num(kTop + (kH - kTop - kBottom) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(yl) + "</text>\n";
    return s;
}

}  // namespace

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::vector<bool>& marked)
{
    const double row = 16, left = 150;
    const double h = kTop + row * static_cast<double>(labels.size()) + 20;
    double top = 0.0;
    for (double v : values) top = std::max(top, v);
    if (top <= 0.0) top = 1.0;
    std::string s = open(title, h);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = kTop + row * static_cast<double>(i);
        const double w = std::max(0.0, values[i]) / top * (kW - left - 60);
        const bool m = i < marked.size() && marked[i];
        s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 11) + "\" text-anchor=\"end\">" + escape(labels[i]) + "</text>\n";
        s += "<rect x=\"" + num(left) + "\" y=\"" + num(y + 2) + "\" width=\"" + num(w) + "\" height=\"" + num(row - 4) +
             "\" fill=\"" + (m ? "#d95f02" : "#9fb4c7") + "\"/>\n";
        s += "<text x=\"" + num(left + w + 4) + "\" y=\"" + num(y + 11) + "\">" + tick(values[i]) + "</text>\n";
    }
    return s + "</svg>\n";
}

std::string scatter(const std::string& title, const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<int>& group, const std::string& x_label, const std::string& y_label)
{
    const Axes a = fit_axes(x, y);
    std::string s = open(title) + frame(a, x_label, y_label, false);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int g = i < group.size() ? group[i] : 0;
        s += "<circle cx=\"" + num(a.px(x[i])) + "\" cy=\"" + num(a.py(y[i])) + "\" r=\"3\" fill=\"" +
             kPalette[static_cast<std::size_t>(std::abs(g)) % 8] + "\" fill-opacity=\"0.8\"/>\n";
    }
    return s + "</svg>\n";
}

std::string power_fit(const std::string& title, const std::vector<double>& x, const std::vector<double>& y,
                      double log_a, double b, const std::string& x_label, const std::string& y_label)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0 && y[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    const Axes a = fit_axes(lx, ly);
    std::string s = open(title) + frame(a, x_label + " (log)", y_label + " (log)", true);
    for (std::size_t i = 0; i < lx.size(); ++i)
        s += "<circle cx=\"" + num(a.px(lx[i])) + "\" cy=\"" + num(a.py(ly[i])) + "\" r=\"2.5\" fill=\"#1b9e77\" fill-opacity=\"0.7\"/>\n";
    if (!lx.empty())
        s += "<line x1=\"" + num(a.px(a.x0)) + "\" y1=\"" + num(a.py(log_a + b * a.x0)) + "\" x2=\"" + num(a.px(a.x1)) +
             "\" y2=\"" + num(a.py(log_a + b * a.x1)) + "\" stroke=\"#d95f02\" stroke-width=\"2\"/>\n";
    return s + "</svg>\n";
}

}  // namespace como::pipeline::svg
