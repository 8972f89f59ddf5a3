#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tlknn/harness.hpp"

namespace tlknn {

namespace {

struct Series {
  std::string label;
  std::vector<const RateRecord*> rows;
};

std::vector<Series> group_series(const ParsedRecords& parsed) {
  std::vector<Series> series;
  std::set<std::string> policies;
  for (const auto& b : parsed.blocks)
    if (!b.policy.empty()) policies.insert(b.policy);

  if (policies.size() > 1) {
    std::map<std::string, std::size_t> slot;
    for (const auto& b : parsed.blocks) {
      const std::string label = b.policy.empty() ? "unlabelled" : b.policy;
      auto [it, inserted] = slot.emplace(label, series.size());
      if (inserted) series.push_back({label, {}});
      for (const auto& r : b.records) series[it->second].rows.push_back(&r);
    }
    return series;
  }

  std::set<std::size_t> n_sources;
  for (const auto& b : parsed.blocks)
    for (const auto& r : b.records) n_sources.insert(r.n_source);
  // With a single n_P value the sweep runs over n_Q, so n_Q is the axis.
  const bool by_target = n_sources.size() > 1;
  std::map<std::size_t, Series> keyed;
  for (const auto& b : parsed.blocks)
    for (const auto& r : b.records) {
      const std::size_t key = by_target ? r.n_target : r.n_source;
      auto& s = keyed[key];
      if (s.label.empty()) s.label = (by_target ? "n_Q=" : "n_P=") + std::to_string(key);
      s.rows.push_back(&r);
    }
  for (auto& [key, s] : keyed) series.push_back(std::move(s));
  return series;
}

std::string py_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

std::string plot_script(const ParsedRecords& records, const std::string& image_path,
                        const std::string& title) {
  const auto series = group_series(records);
  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
        "# Log-log excess error against n = n_P + n_Q. Zero estimates are drawn at\n"
        "# their CI half-width, matching the rate fit.\n"
        "import sys\n"
        "from collections import defaultdict\n\n"
        "import matplotlib\n"
        "matplotlib.use(\"Agg\")\n"
        "import matplotlib.pyplot as plt\n\n";
  py << "TITLE = " << py_string(title) << "\n";
  py << "IMAGE = " << py_string(image_path) << "\n\n";
  py << "# (n_P, n_Q, trial, excess_error, ci_half_width)\n";
  py << "SERIES = [\n";
  for (const auto& s : series) {
    py << "    {\"label\": " << py_string(s.label) << ", \"rows\": [\n";
    for (const RateRecord* r : s.rows)
      py << "        (" << r->n_source << ", " << r->n_target << ", " << r->trial << ", "
         << format_double(r->excess_error) << ", " << format_double(r->ci_half_width) << "),\n";
    py << "    ]},\n";
  }
  py << "]\n\n";
  py << "def main():\n"
        "    out = sys.argv[1] if len(sys.argv) > 1 else IMAGE\n"
        "    fig, ax = plt.subplots(figsize=(6.4, 4.8))\n"
        "    drawn = False\n"
        "    for s in SERIES:\n"
        "        by_n = defaultdict(list)\n"
        "        for n_p, n_q, _trial, err, ci in s[\"rows\"]:\n"
        "            by_n[n_p + n_q].append(err if err > 0 else ci)\n"
        "        xs = sorted(by_n)\n"
        "        if not xs:\n"
        "            continue\n"
        "        ys = [sum(by_n[x]) / len(by_n[x]) for x in xs]\n"
        "        ax.plot(xs, ys, marker=\"o\", label=s[\"label\"])\n"
        "        drawn = True\n"
        "    if drawn:\n"
        "        ax.set_xscale(\"log\")\n"
        "        ax.set_yscale(\"log\")\n"
        "        ax.legend()\n"
        "    else:\n"
        "        ax.text(0.5, 0.5, \"no records\", ha=\"center\", va=\"center\")\n"
        "    ax.set_xlabel(\"n = n_P + n_Q\")\n"
        "    ax.set_ylabel(\"mean excess error\")\n"
        "    ax.set_title(TITLE)\n"
        "    fig.tight_layout()\n"
        "    fig.savefig(out, dpi=120)\n\n\n"
        "if __name__ == \"__main__\":\n"
        "    main()\n";
  return py.str();
}

void emit_plot_script(const std::string& records_path, const std::string& out_path) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open records file '" + records_path + "'");
  const ParsedRecords parsed = read_records_csv(in);

  std::string image = out_path;
  const auto slash = image.find_last_of('/');
  const auto dot = image.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    image.erase(dot);
  image += ".png";

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write plot script '" + out_path + "'");
  out << plot_script(parsed, image, records_path);
  if (!out) throw std::runtime_error("write failed for plot script '" + out_path + "'");
}

}  // namespace tlknn
