#include "cmiknn/report.hpp"

#include <fstream>
#include <stdexcept>

#include "cmiknn/util.hpp"

namespace cmiknn {
namespace {

nlohmann::ordered_json stats_to_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"stddev", s.stddev}};
}

nlohmann::ordered_json dims_to_json(const RoleDims& dims) {
  return {{"x", dims.x}, {"y", dims.y}, {"z", dims.z}};
}

}  // namespace

nlohmann::ordered_json schedule_to_json(const BatchSchedule& schedule) {
  return {{"n", schedule.n},
          {"k", schedule.k},
          {"m", schedule.m},
          {"b", schedule.b},
          {"b_prime", schedule.b_prime},
          {"mode", schedule.mode == ScheduleMode::theory ? "theory" : "fixed_k"},
          {"epsilon_0", schedule.epsilon_0},
          {"p1", schedule.p1()}};
}

nlohmann::ordered_json net_to_json(const NetConfig& net) {
  return {{"input_dim", net.input_dim},
          {"hidden", net.hidden},
          {"tau", net.tau},
          {"optimizer",
           {{"learning_rate", net.optimizer.learning_rate},
            {"beta1", net.optimizer.beta1},
            {"beta2", net.optimizer.beta2},
            {"epsilon_hat", net.optimizer.epsilon_hat}}},
          {"minibatch_size", net.minibatch_size},
          {"epochs", net.epochs}};
}

nlohmann::ordered_json report_to_json(const EstimateReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "cmiknn-report-v1";
  doc["kind"] = "algorithm1";
  doc["config"] = {{"n_total", report.n_total},
                   {"dims", dims_to_json(report.dims)},
                   {"train_fraction", report.train_fraction},
                   {"master_seed", report.master_seed},
                   {"schedule", schedule_to_json(report.schedule)},
                   {"net", net_to_json(report.net)},
                   {"data_provenance", report.data_provenance}};
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& t : report.trials)
    trials.push_back({{"dv", t.dv},
                      {"nwj", t.nwj},
                      {"ldr", t.ldr},
                      {"final_train_loss", t.final_train_loss},
                      {"classifier_norm", t.classifier_norm},
                      {"classifier_lipschitz", t.classifier_lipschitz}});
  doc["trials"] = std::move(trials);
  doc["summary"] = {{"dv", stats_to_json(report.dv)},
                    {"nwj", stats_to_json(report.nwj)},
                    {"ldr", stats_to_json(report.ldr)}};
  return doc;
}

nlohmann::ordered_json report_to_json(const MidiffReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "cmiknn-report-v1";
  doc["kind"] = "midiff";
  doc["config"] = {{"n_total", report.n_total},
                   {"dims", dims_to_json(report.dims)},
                   {"train_fraction", report.train_fraction},
                   {"master_seed", report.master_seed},
                   {"b", report.b},
                   {"net", net_to_json(report.net)},
                   {"data_provenance", report.data_provenance}};
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& t : report.trials)
    trials.push_back({{"dv_xyz", t.dv_xyz},
                      {"dv_xz", t.dv_xz},
                      {"dv_diff", t.dv_diff},
                      {"nwj_xyz", t.nwj_xyz},
                      {"nwj_xz", t.nwj_xz},
                      {"nwj_diff", t.nwj_diff}});
  doc["trials"] = std::move(trials);
  doc["summary"] = {{"dv_diff", stats_to_json(report.dv_diff)},
                    {"nwj_diff", stats_to_json(report.nwj_diff)}};
  return doc;
}

nlohmann::ordered_json digraph_to_json(const DIGraph& graph) {
  nlohmann::ordered_json doc;
  doc["format"] = "cmiknn-digraph-v1";
  doc["nodes"] = graph.nodes;
  nlohmann::ordered_json weights;
  for (std::size_t a = 0; a < 3; ++a) {
    nlohmann::ordered_json row;
    for (std::size_t b = 0; b < 3; ++b)
      row[graph.nodes[b]] = graph.weights[a][b];
    weights[graph.nodes[a]] = std::move(row);
  }
  doc["weights"] = std::move(weights);
  return doc;
}

nlohmann::ordered_json timing_to_json(const StageSeconds& seconds) {
  return {{"resample_s", seconds.resample},
          {"train_s", seconds.train},
          {"evaluate_s", seconds.evaluate},
          {"total_s", seconds.total}};
}

void write_json(const nlohmann::ordered_json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_json: cannot write " + path);
  out << doc.dump(2) << '\n';
}

void write_report_csv(const EstimateReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_report_csv: cannot write " + path);
  out << "trial,dv,nwj,ldr,final_train_loss,classifier_norm,"
         "classifier_lipschitz\n";
  for (std::size_t t = 0; t < report.trials.size(); ++t) {
    const auto& r = report.trials[t];
    out << t << ',' << format_double(r.dv) << ',' << format_double(r.nwj)
        << ',' << format_double(r.ldr) << ','
        << format_double(r.final_train_loss) << ','
        << format_double(r.classifier_norm) << ','
        << format_double(r.classifier_lipschitz) << '\n';
  }
}

void write_report_csv(const MidiffReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_report_csv: cannot write " + path);
  out << "trial,dv_xyz,dv_xz,dv_diff,nwj_xyz,nwj_xz,nwj_diff\n";
  for (std::size_t t = 0; t < report.trials.size(); ++t) {
    const auto& r = report.trials[t];
    out << t << ',' << format_double(r.dv_xyz) << ',' << format_double(r.dv_xz)
        << ',' << format_double(r.dv_diff) << ',' << format_double(r.nwj_xyz)
        << ',' << format_double(r.nwj_xz) << ',' << format_double(r.nwj_diff)
        << '\n';
  }
}

void write_digraph_csv(const DIGraph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_digraph_csv: cannot write " + path);
  out << "from\\to";
  for (const auto& n : graph.nodes) out << ',' << n;
  out << '\n';
  for (std::size_t a = 0; a < 3; ++a) {
    out << graph.nodes[a];
    for (std::size_t b = 0; b < 3; ++b)
      out << ',' << format_double(graph.weights[a][b]);
    out << '\n';
  }
}

}  // namespace cmiknn
