#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hjcli {

namespace {

constexpr double width = 640.0;
constexpr double height = 420.0;
constexpr double left = 70.0;
constexpr double right = 20.0;
constexpr double top = 40.0;
constexpr double bottom = 55.0;
constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_loglog_svg(const std::string& path, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -x0;
    double y0 = x0;
    double y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (s.x[i] > 0.0 && s.y[i] > 0.0) {
                x0 = std::min(x0, std::log10(s.x[i]));
                x1 = std::max(x1, std::log10(s.x[i]));
                y0 = std::min(y0, std::log10(s.y[i]));
                y1 = std::max(y1, std::log10(s.y[i]));
            }
        }
    }
    if (!(x0 <= x1)) {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    x0 = std::floor(x0);
    x1 = std::max(std::ceil(x1), x0 + 1.0);
    y0 = std::floor(y0);
    y1 = std::max(std::ceil(y1), y0 + 1.0);
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double lx) { return left + (lx - x0) / (x1 - x0) * pw; };
    auto py = [&](double ly) { return top + (1.0 - (ly - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";
    for (double e = x0; e <= x1 + 1e-9; e += 1.0) {
        os << "<line x1=\"" << px(e) << "\" y1=\"" << top << "\" x2=\"" << px(e) << "\" y2=\""
           << top + ph << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << px(e) << "\" y=\"" << top + ph + 16
           << "\" text-anchor=\"middle\">1e" << static_cast<int>(e) << "</text>\n";
    }
    for (double e = y0; e <= y1 + 1e-9; e += 1.0) {
        os << "<line x1=\"" << left << "\" y1=\"" << py(e) << "\" x2=\"" << left + pw << "\" y2=\""
           << py(e) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(e) + 4
           << "\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
    }
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << top + ph / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = palette[k % std::size(palette)];
        std::ostringstream pts;
        pts.precision(6);
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (s.x[i] > 0.0 && s.y[i] > 0.0) {
                const double cx = px(std::log10(s.x[i]));
                const double cy = py(std::log10(s.y[i]));
                pts << cx << ',' << cy << ' ';
                os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"3\" fill=\"" << colour
                   << "\"/>\n";
            }
        }
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"" << pts.str()
           << "\"/>\n";
        os << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 + 16 * static_cast<double>(k)
           << "\" fill=\"" << colour << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";

    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << os.str();
}

}  // namespace hjcli
