#include "ucl/svg.hpp"

#include <fstream>
#include <sstream>

namespace ucl {

void write_roc_svg(const std::filesystem::path& path, const RocCurve& curve,
                   const std::string& title, const std::string& config_hash) {
    const double size = 480.0, margin = 48.0;
    const double plot = size - 2.0 * margin;
    auto px = [&](double fpr) { return margin + fpr * plot; };
    auto py = [&](double tpr) { return size - margin - tpr * plot; };

    std::ofstream f(path);
    if (!f) throw IoError("write_roc_svg: cannot open " + path.string());
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
    if (!config_hash.empty()) f << "<!-- config_hash=" << config_hash << " -->\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";

    // axes
    f << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(0) << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\""
      << py(1) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        f << "<text x=\"" << px(v) << "\" y=\"" << py(0) + 16
          << "\" text-anchor=\"middle\" font-size=\"10\">" << v << "</text>\n";
        f << "<text x=\"" << px(0) - 8 << "\" y=\"" << py(v) + 3
          << "\" text-anchor=\"end\" font-size=\"10\">" << v << "</text>\n";
    }
    f << "<text x=\"" << size / 2 << "\" y=\"" << size - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">false positive rate</text>\n";
    f << "<text x=\"14\" y=\"" << size / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " << size / 2
      << ")\">true positive rate</text>\n";

    // random-classifier baseline
    f << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(1) << "\" stroke=\"gray\" stroke-dasharray=\"5,5\"/>\n";

    std::ostringstream pts;
    for (const auto& p : curve.points) pts << px(p.fpr) << "," << py(p.tpr) << " ";
    f << "<polyline points=\"" << pts.str()
      << "\" fill=\"none\" stroke=\"crimson\" stroke-width=\"1.6\"/>\n";
    f << "</svg>\n";
    if (!f) throw IoError("write_roc_svg: short write to " + path.string());
}

} // namespace ucl
