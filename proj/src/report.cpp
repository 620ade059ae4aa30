#include "ahumpc/report.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "ahumpc/telemetry.hpp"

namespace ahumpc::report {

double energy_kwh(double on_hours, double volts, double amps, double cos_phi) {
  if (on_hours < 0.0) throw std::invalid_argument("report: negative on-hours");
  if (!(volts > 0.0) || !(amps > 0.0) || !(cos_phi > 0.0) || cos_phi > 1.0) {
    throw std::invalid_argument("report: electrical parameters out of range");
  }
  return on_hours * volts * amps * cos_phi * std::sqrt(3.0) / 1000.0;
}

namespace {

struct RunMeta {
  std::string start_date;
  int days = 0;
  std::uint64_t seed = 0;
  std::string controller;
  double volts = 380.0, amps = 15.4, cos_phi = 0.82;
  int occupancy_start = 8 * 60, occupancy_stop = 18 * 60;
};

RunMeta load_meta(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "run_meta.json");
  if (!in) {
    throw std::invalid_argument("report: missing run_meta.json in " + run_dir.string());
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw std::invalid_argument("report: corrupt run_meta.json in " + run_dir.string());
  }
  RunMeta meta;
  meta.start_date = j.at("start_date").get<std::string>();
  meta.days = j.at("days").get<int>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.controller = j.at("controller").get<std::string>();
  meta.volts = j.at("electrical").at("volts").get<double>();
  meta.amps = j.at("electrical").at("amps").get<double>();
  meta.cos_phi = j.at("electrical").at("cos_phi").get<double>();
  meta.occupancy_start = j.at("occupancy_window").at(0).get<int>();
  meta.occupancy_stop = j.at("occupancy_window").at(1).get<int>();
  return meta;
}

std::vector<telemetry::MpcMovement> load_movements(
    const std::filesystem::path& run_dir) {
  telemetry::JsonlStore store(run_dir / "mpc-movements.ndjson");
  std::vector<telemetry::MpcMovement> out;
  for (const auto& j : store.read_all()) {
    out.push_back(telemetry::movement_from_json(j));
  }
  return out;
}

}  // namespace

RunSummary summarize_run(const std::filesystem::path& run_dir) {
  const RunMeta meta = load_meta(run_dir);
  const auto movements = load_movements(run_dir);

  RunSummary s;
  s.controller = meta.controller;
  s.movement_count = static_cast<int>(movements.size());

  std::map<std::string, DayEnergy> per_day;
  double err_sum = 0.0;
  int err_count = 0;
  for (const auto& m : movements) {
    const std::string day = format_minute(m.timestamp).substr(0, 10);
    auto& d = per_day[day];
    d.date = day;
    d.on_hours += m.on_minutes / 60.0;
    const int tod = minute_of_day(m.timestamp);
    if (tod >= meta.occupancy_start && tod < meta.occupancy_stop) {
      err_sum += std::abs(m.ait - m.setpoint);
      ++err_count;
    }
  }
  for (auto& [day, d] : per_day) {
    d.kwh = energy_kwh(d.on_hours, meta.volts, meta.amps, meta.cos_phi);
    s.total_on_hours += d.on_hours;
    s.total_kwh += d.kwh;
    s.days.push_back(d);
  }
  s.tracking_mean_abs_err = err_count > 0 ? err_sum / err_count : 0.0;
  return s;
}

EnergyReport compare(const std::filesystem::path& mpc_dir,
                     const std::filesystem::path& manual_dir) {
  const RunMeta a = load_meta(mpc_dir);
  const RunMeta b = load_meta(manual_dir);
  if (a.start_date != b.start_date || a.days != b.days || a.seed != b.seed) {
    throw std::invalid_argument(
        "report: runs cover different date ranges or weather seeds");
  }
  EnergyReport rep;
  rep.mpc = summarize_run(mpc_dir);
  rep.manual = summarize_run(manual_dir);
  rep.savings_pct =
      rep.manual.total_kwh > 0.0
          ? (rep.manual.total_kwh - rep.mpc.total_kwh) / rep.manual.total_kwh * 100.0
          : 0.0;
  return rep;
}

namespace {

nlohmann::ordered_json summary_json(const RunSummary& s) {
  nlohmann::ordered_json days = nlohmann::ordered_json::array();
  for (const auto& d : s.days) {
    days.push_back({{"date", d.date}, {"on_hours", d.on_hours}, {"kwh", d.kwh}});
  }
  return {{"controller", s.controller},
          {"total_on_hours", s.total_on_hours},
          {"total_kwh", s.total_kwh},
          {"tracking_mean_abs_err", s.tracking_mean_abs_err},
          {"movements", s.movement_count},
          {"days", days}};
}

void write_csv_cell(std::ofstream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out << buf;
}

}  // namespace

nlohmann::ordered_json to_json(const EnergyReport& report) {
  return {{"mpc", summary_json(report.mpc)},
          {"manual", summary_json(report.manual)},
          {"savings_pct", report.savings_pct}};
}

void write_report_files(const std::filesystem::path& run_dir) {
  const RunMeta meta = load_meta(run_dir);
  const auto out_dir = run_dir / "reports";
  std::filesystem::create_directories(out_dir);

  {
    const auto movements = load_movements(run_dir);
    std::ofstream out(out_dir / "movements.csv");
    out << "date,ait,setpoint,u,on_minutes,kwh\n";
    for (const auto& m : movements) {
      out << format_minute(m.timestamp) << ",";
      write_csv_cell(out, m.ait);
      out << ",";
      write_csv_cell(out, m.setpoint);
      out << ",";
      write_csv_cell(out, m.u_optimal);
      out << ",";
      write_csv_cell(out, m.on_minutes);
      out << ",";
      write_csv_cell(out, energy_kwh(m.on_minutes / 60.0, meta.volts, meta.amps,
                                     meta.cos_phi));
      out << "\n";
    }
  }

  {
    telemetry::JsonlStore ait_store(run_dir / "ait.ndjson");
    std::ofstream out(out_dir / "ait.csv");
    out << "date,ait,humidity_avg,reporting_count\n";
    for (const auto& j : ait_store.read_all()) {
      const auto rec = telemetry::ait_from_json(j);
      out << format_minute(rec.timestamp) << ",";
      write_csv_cell(out, rec.ait);
      out << ",";
      write_csv_cell(out, rec.humidity_avg);
      out << "," << rec.reporting_count << "\n";
    }
  }

  {
    const RunSummary s = summarize_run(run_dir);
    std::ofstream out(out_dir / "energy_daily.csv");
    out << "date,on_hours,kwh\n";
    for (const auto& d : s.days) {
      out << d.date << ",";
      write_csv_cell(out, d.on_hours);
      out << ",";
      write_csv_cell(out, d.kwh);
      out << "\n";
    }
  }

  {
    // Metrics table in the style of the nightly training log, one row per
    // (night, direction).
    std::ofstream out(out_dir / "metrics_table.txt");
    out << "date             direction   train/val/test        mse      "
           "scaled_mae  expl_var   r_squared\n";
    const auto metrics_path = run_dir / "models" / "metrics.ndjson";
    if (std::filesystem::exists(metrics_path)) {
      telemetry::JsonlStore store(metrics_path);
      for (const auto& j : store.read_all()) {
        char line[160];
        std::snprintf(line, sizeof(line),
                      "%-16s %-11s %6lld/%lld/%lld   %9.5f  %9.5f  %9.5f  %9.5f\n",
                      j.at("date").get<std::string>().c_str(),
                      j.at("direction").get<std::string>().c_str(),
                      j.at("train_size").get<long long>(),
                      j.at("val_size").get<long long>(),
                      j.at("test_size").get<long long>(),
                      j.at("mse").get<double>(), j.at("scaled_mae").get<double>(),
                      j.at("explained_variance").get<double>(),
                      j.at("r_squared").get<double>());
        out << line;
      }
    }
  }
}

}  // namespace ahumpc::report
