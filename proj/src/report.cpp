#include "exwarp/report.hpp"

#include <cmath>
#include <cstdio>

#include "exwarp/errors.hpp"
#include "json.hpp"

namespace exwarp {

void QualityTotals::add(const DecisionTrace& trace) {
  ++intervals;
  inserted_frames += static_cast<std::size_t>(trace.inserted_frames());
  if (trace.quality_annotated) {
    ++annotated;
    for (std::size_t i = 0; i < trace.quality.size(); ++i) {
      psnr_sum += trace.quality[i].psnr;
      ssim_sum += trace.quality[i].ssim;
      slot_psnr_sum[i] += trace.quality[i].psnr;
      ++slots;
    }
  }
  for (const NodeRecord& n : trace.nodes) {
    ++decisions;
    if (n.action == Action::warp) ++warp_decisions;
  }
}

void QualityTotals::merge(const QualityTotals& o) {
  intervals += o.intervals;
  inserted_frames += o.inserted_frames;
  slots += o.slots;
  psnr_sum += o.psnr_sum;
  ssim_sum += o.ssim_sum;
  decisions += o.decisions;
  warp_decisions += o.warp_decisions;
  annotated += o.annotated;
  for (std::size_t i = 0; i < slot_psnr_sum.size(); ++i) slot_psnr_sum[i] += o.slot_psnr_sum[i];
}

double QualityTotals::mean_psnr() const {
  return slots == 0 ? std::nan("") : psnr_sum / static_cast<double>(slots);
}

double QualityTotals::mean_ssim() const {
  return slots == 0 ? std::nan("") : ssim_sum / static_cast<double>(slots);
}

double QualityTotals::mean_psnr_at(int slot) const {
  if (slot < 0 || slot > 2) throw Error("display slot out of range");
  return annotated == 0 ? std::nan("")
                        : slot_psnr_sum[static_cast<std::size_t>(slot)] / static_cast<double>(annotated);
}

double QualityTotals::warp_ratio() const {
  return decisions == 0 ? std::nan("")
                        : static_cast<double>(warp_decisions) / static_cast<double>(decisions);
}

double QualityTotals::effective_fps(double base_fps) const {
  if (intervals == 0) return base_fps;
  return base_fps *
         (1.0 + static_cast<double>(inserted_frames) / static_cast<double>(intervals));
}

void QualitySummary::add(const DecisionTrace& trace) {
  all.add(trace);
  by_scenario[static_cast<std::size_t>(trace.scenario)].add(trace);
}

void QualitySummary::merge(const QualitySummary& other) {
  if (base_fps != other.base_fps) throw Error("cannot merge summaries with different base rates");
  all.merge(other.all);
  for (std::size_t k = 0; k < by_scenario.size(); ++k) by_scenario[k].merge(other.by_scenario[k]);
}

QualitySummary aggregate_report(std::span<const DecisionTrace> traces, std::string policy,
                                double base_fps) {
  QualitySummary s;
  s.policy = std::move(policy);
  s.base_fps = base_fps;
  for (const DecisionTrace& t : traces) s.add(t);
  return s;
}

namespace {

void csv_row(std::ostream& out, const std::string& policy, const std::string& scenario,
             const QualityTotals& t, double base_fps) {
  char line[512];
  std::snprintf(line, sizeof(line), "%s,%s,%zu,%.6f,%.8f,%.6f,%.6f\n", policy.c_str(),
                scenario.c_str(), t.intervals, t.mean_psnr(), t.mean_ssim(), t.warp_ratio(),
                t.effective_fps(base_fps));
  out << line;
}

nlohmann::ordered_json totals_json(const QualityTotals& t, double base_fps) {
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr; };
  nlohmann::ordered_json j;
  j["count"] = t.intervals;
  j["slots"] = t.slots;
  j["inserted_frames"] = t.inserted_frames;
  j["mean_psnr"] = number(t.mean_psnr());
  j["mean_ssim"] = number(t.mean_ssim());
  nlohmann::ordered_json slots = nlohmann::ordered_json::array();
  for (int i = 0; i < 3; ++i) slots.push_back(number(t.mean_psnr_at(i)));
  j["slot_psnr"] = std::move(slots);
  j["warp_ratio"] = number(t.warp_ratio());
  j["effective_fps"] = t.effective_fps(base_fps);
  return j;
}

}  // namespace

void write_report_csv(std::ostream& out, std::span<const QualitySummary> summaries) {
  out << "policy,scenario,count,mean_psnr,mean_ssim,warp_ratio,effective_fps\n";
  for (const QualitySummary& s : summaries) {
    csv_row(out, s.policy, "all", s.all, s.base_fps);
    for (int k = 0; k < kScenarioCount; ++k) {
      const QualityTotals& t = s.by_scenario[static_cast<std::size_t>(k)];
      if (t.intervals > 0) csv_row(out, s.policy, to_string(static_cast<Scenario>(k)), t, s.base_fps);
    }
  }
}

std::string report_json(std::span<const QualitySummary> summaries) {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const QualitySummary& s : summaries) {
    nlohmann::ordered_json j;
    j["policy"] = s.policy;
    j["base_fps"] = s.base_fps;
    j["all"] = totals_json(s.all, s.base_fps);
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (int k = 0; k < kScenarioCount; ++k) {
      const QualityTotals& t = s.by_scenario[static_cast<std::size_t>(k)];
      if (t.intervals > 0) per[to_string(static_cast<Scenario>(k))] = totals_json(t, s.base_fps);
    }
    j["scenarios"] = std::move(per);
    root.push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

}  // namespace exwarp
