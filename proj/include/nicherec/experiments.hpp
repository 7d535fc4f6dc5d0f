#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nicherec/analytics.hpp"
#include "nicherec/engine.hpp"
#include "nicherec/output.hpp"

namespace nicherec {

// ---------------------------------------------------------------------------
// table1: relative engagement/utility change of the posterior-switching
// policy vs always-popular, closed form, one row per discount factor.
// ---------------------------------------------------------------------------

struct Table1Row {
  double delta = 0.0;
  double d_eng_pct = 0.0;
  double d_util_pct = 0.0;
};

inline std::vector<Table1Row> run_table1(double v_pop, std::span<const double> deltas) {
  const MisalignmentReport report = misalignment_report(v_pop, deltas);
  std::vector<Table1Row> rows;
  rows.reserve(report.rows.size());
  for (const auto& r : report.rows) rows.push_back({r.delta, r.d_eng_pct, r.d_util_pct});
  return rows;
}

inline Table table1_to_table(const std::vector<Table1Row>& rows) {
  Table t;
  t.header = {"delta", "d_eng_pct", "d_util_pct"};
  for (const auto& r : rows) {
    t.rows.push_back({format_double(r.delta), format_double(r.d_eng_pct),
                      format_double(r.d_util_pct)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// figure1: the two per-period (engagement, utility) points and the percent
// gaps between them.
// ---------------------------------------------------------------------------

struct Figure1Result {
  double v_pop = 1.0;
  double delta = 0.99;
  double app_eng = 0.0;
  double app_util = 0.0;
  double pear_eng = 0.0;
  double pear_util = 0.0;
  double util_gain_pct = 0.0;  // recomputed from the plotted points
  double eng_loss_pct = 0.0;
};

inline Figure1Result run_figure1(double v_pop, double delta) {
  const auto app = closed_forms_app(v_pop, delta);
  const auto pear = closed_forms_pear_limit(v_pop, delta);
  Figure1Result r;
  r.v_pop = v_pop;
  r.delta = delta;
  r.app_eng = app.per_period_eng;
  r.app_util = app.per_period_util;
  r.pear_eng = pear.per_period_eng;
  r.pear_util = pear.per_period_util;
  r.util_gain_pct = 100.0 * (r.pear_util / r.app_util - 1.0);
  r.eng_loss_pct = 100.0 * (1.0 - r.pear_eng / r.app_eng);
  return r;
}

inline Table figure1_to_table(const Figure1Result& r) {
  Table t;
  t.header = {"policy", "per_period_eng", "per_period_util"};
  t.rows.push_back({"app", format_double(r.app_eng), format_double(r.app_util)});
  t.rows.push_back({"pear_limit", format_double(r.pear_eng), format_double(r.pear_util)});
  return t;
}

inline std::string figure1_to_svg(const Figure1Result& r) {
  char gain[64], loss[64];
  std::snprintf(gain, sizeof(gain), "%.2f%% gain in utility", r.util_gain_pct);
  std::snprintf(loss, sizeof(loss), "%.2f%% loss in engagement", r.eng_loss_pct);
  return svg_scatter(
      {{r.app_eng, r.app_util, "engagement optimal", "purple"},
       {r.pear_eng, r.pear_util, "utility-aware", "magenta"}},
      {gain, loss}, "per-period engagement", "per-period utility");
}

// ---------------------------------------------------------------------------
// figure34: explore-then-commit vs always-popular under the GPD niche model,
// Monte Carlo, reported as ratios to the closed-form always-popular values.
// ---------------------------------------------------------------------------

struct Figure34Row {
  std::int64_t explore_len = 0;
  double xi = 0.0;
  double eng_ratio = 0.0;
  double util_ratio = 0.0;
  double eng_ci = 0.0;   // 95% half-width on the ratio
  double util_ci = 0.0;
  bool warn = false;     // half-width above the requested threshold
};

struct Figure34Config {
  double v_pop = 1.0;
  double delta = 0.999;
  std::uint64_t episodes = 100000;
  std::uint64_t master_seed = 1;
  SimMode mode = SimMode::Conditional;
  int workers = 1;
  bool stratify = true;
  double ci_warn_threshold = 0.1;
};

inline std::vector<Figure34Row> run_figure34(std::span<const double> xis,
                                             std::int64_t explore_len,
                                             const Figure34Config& cfg) {
  const auto app = closed_forms_app(cfg.v_pop, cfg.delta);
  std::vector<Figure34Row> rows;
  std::uint64_t cell = 0;
  for (double xi : xis) {
    ModelParams params{cfg.v_pop, cfg.delta, Gpd{xi}, 2};
    SimConfig sim;
    sim.episodes = cfg.episodes;
    sim.master_seed = mix64(cfg.master_seed + 0x9E3779B97F4A7C15ULL * (cell + 1));
    sim.mode = cfg.mode;
    sim.policy = DiceSpec{explore_len};
    sim.workers = cfg.workers;
    sim.stratify_niche = cfg.stratify;
    const MonteCarloResult mc = run_monte_carlo(params, sim);
    Figure34Row row;
    row.explore_len = explore_len;
    row.xi = xi;
    row.eng_ratio = mc.engagement.mean / app.eng;
    row.util_ratio = mc.utility.mean / app.util;
    row.eng_ci = 1.959963984540054 * mc.engagement.std_error / app.eng;
    row.util_ci = 1.959963984540054 * mc.utility.std_error / app.util;
    row.warn = row.eng_ci > cfg.ci_warn_threshold || row.util_ci > cfg.ci_warn_threshold ||
               mc.flagged_episodes > 0;
    rows.push_back(row);
    ++cell;
  }
  return rows;
}

inline Table figure34_to_table(const std::vector<Figure34Row>& rows) {
  Table t;
  t.header = {"explore_len", "xi", "eng_ratio", "util_ratio", "eng_ci", "util_ci", "warn"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.explore_len), format_double(r.xi),
                      format_double(r.eng_ratio), format_double(r.util_ratio),
                      format_double(r.eng_ci), format_double(r.util_ci),
                      r.warn ? "1" : "0"});
  }
  return t;
}

inline std::string figure34_to_svg(const std::vector<Figure34Row>& rows,
                                   const std::string& title) {
  std::vector<SvgBarGroup> groups;
  for (const auto& r : rows) {
    groups.push_back({format_double(r.xi), r.eng_ratio - 1.0, r.util_ratio - 1.0});
  }
  return svg_grouped_bars(groups, title);
}

// ---------------------------------------------------------------------------
// JSON emission: config echo plus rows keyed by the CSV column names.
// ---------------------------------------------------------------------------

inline nlohmann::json table_to_json(const Table& table, const nlohmann::json& config) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj;
    for (std::size_t i = 0; i < table.header.size() && i < row.size(); ++i) {
      // Re-parse numeric fields so JSON holds numbers, not strings.
      try {
        obj[table.header[i]] = parse_double(row[i]);
      } catch (const std::invalid_argument&) {
        obj[table.header[i]] = row[i];
      }
    }
    rows.push_back(std::move(obj));
  }
  return nlohmann::json{{"config", config}, {"rows", std::move(rows)}};
}

}  // namespace nicherec
