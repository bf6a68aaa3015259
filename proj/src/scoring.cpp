// src/scoring.cpp

#include "apl/scoring.hpp"

#include <cstdio>

#include <json.hpp>

namespace apl {

using ordered_json = nlohmann::ordered_json;

double correctness(const EditCounts& c) {
  if (c.n <= 0) throw DataError("correctness undefined for N = 0");
  return static_cast<double>(c.n - c.s - c.d) / static_cast<double>(c.n);
}

double accuracy(const EditCounts& c) {
  if (c.n <= 0) throw DataError("accuracy undefined for N = 0");
  return static_cast<double>(c.n - c.s - c.d - c.i) / static_cast<double>(c.n);
}

namespace {

// label matched/substituted to each canonical position, nullopt = deleted
std::vector<std::optional<PhoneLabel>> anchored_labels(std::span<const PhoneLabel> canonical,
                                                       std::span<const PhoneLabel> hyp, long* insertions) {
  auto [steps, counts] = align(canonical, hyp);
  std::vector<std::optional<PhoneLabel>> out(canonical.size());
  for (const auto& st : steps) {
    switch (st.op) {
      case EditOp::kMatch:
      case EditOp::kSub:
        out[static_cast<size_t>(st.ref_index)] = hyp[static_cast<size_t>(st.hyp_index)];
        break;
      case EditOp::kDel:
        out[static_cast<size_t>(st.ref_index)] = std::nullopt;
        break;
      case EditOp::kIns:
        ++*insertions;
        break;
    }
  }
  return out;
}

}  // namespace

MddCounts hierarchical_eval(std::span<const PhoneLabel> canonical, std::span<const PhoneLabel> perceived,
                            std::span<const PhoneLabel> recognized) {
  if (canonical.empty()) throw DataError("hierarchical_eval: canonical sequence must be non-empty");
  MddCounts m;
  auto p = anchored_labels(canonical, perceived, &m.insertions_excluded);
  auto r = anchored_labels(canonical, recognized, &m.insertions_excluded);
  for (size_t n = 0; n < canonical.size(); ++n) {
    const bool p_ok = p[n].has_value() && *p[n] == canonical[n];
    const bool r_ok = r[n].has_value() && *r[n] == canonical[n];
    if (p_ok && r_ok) {
      ++m.ta;
    } else if (p_ok && !r_ok) {
      ++m.fr;
    } else if (!p_ok && r_ok) {
      ++m.fa;
    } else {
      ++m.tr;
      if (p[n] == r[n])  // nullopt == nullopt counts as agreeing on deletion
        ++m.cd;
      else
        ++m.de;
    }
  }
  return m;
}

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MddMetrics mdd_metrics(const MddCounts& m) {
  MddMetrics out;
  out.frr = ratio(m.fr, m.ta + m.fr);
  out.far = ratio(m.fa, m.fa + m.tr);
  out.detection_accuracy = ratio(m.tr + m.ta, m.tr + m.ta + m.fr + m.fa);
  out.precision = ratio(m.tr, m.tr + m.fr);
  out.recall = ratio(m.tr, m.tr + m.fa);
  if (out.precision && out.recall && (*out.precision + *out.recall) > 0.0)
    out.f_measure = 2.0 * *out.precision * *out.recall / (*out.precision + *out.recall);
  out.der = ratio(m.de, m.de + m.cd);
  return out;
}

CorpusReport corpus_report(std::span<const ScoringInput> inputs) {
  if (inputs.empty()) throw DataError("corpus_report: no utterances to score");
  CorpusReport report;
  report.per_utterance.resize(inputs.size());
  parallel_for(inputs.size(), [&](size_t i) {
    const ScoringInput& in = inputs[i];
    ScoredUtterance& u = report.per_utterance[i];
    u.id = in.id;
    u.edit = align(std::span<const PhoneLabel>(in.perceived), std::span<const PhoneLabel>(in.recognized)).second;
    u.mdd = hierarchical_eval(in.canonical, in.perceived, in.recognized);
  });
  for (const auto& u : report.per_utterance) {
    report.edit.s += u.edit.s;
    report.edit.d += u.edit.d;
    report.edit.i += u.edit.i;
    report.edit.n += u.edit.n;
    report.mdd.ta += u.mdd.ta;
    report.mdd.fr += u.mdd.fr;
    report.mdd.fa += u.mdd.fa;
    report.mdd.tr += u.mdd.tr;
    report.mdd.cd += u.mdd.cd;
    report.mdd.de += u.mdd.de;
    report.mdd.insertions_excluded += u.mdd.insertions_excluded;
  }
  return report;
}

namespace {

ordered_json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

ordered_json edit_json(const EditCounts& e) {
  ordered_json j;
  j["S"] = e.s;
  j["D"] = e.d;
  j["I"] = e.i;
  j["N"] = e.n;
  j["correctness"] = e.n > 0 ? ordered_json(correctness(e)) : ordered_json(nullptr);
  j["accuracy"] = e.n > 0 ? ordered_json(accuracy(e)) : ordered_json(nullptr);
  return j;
}

ordered_json mdd_json(const MddCounts& m) {
  MddMetrics met = mdd_metrics(m);
  ordered_json j;
  j["TA"] = m.ta;
  j["FR"] = m.fr;
  j["FA"] = m.fa;
  j["TR"] = m.tr;
  j["CD"] = m.cd;
  j["DE"] = m.de;
  j["frr"] = opt_json(met.frr);
  j["far"] = opt_json(met.far);
  j["detection_accuracy"] = opt_json(met.detection_accuracy);
  j["precision"] = opt_json(met.precision);
  j["recall"] = opt_json(met.recall);
  j["f_measure"] = opt_json(met.f_measure);
  j["der"] = opt_json(met.der);
  return j;
}

std::string fmt_metric(const std::optional<double>& v) {
  if (!v) return "undef";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::string report_json(const CorpusReport& report) {
  ordered_json j;
  ordered_json per = ordered_json::array();
  for (const auto& u : report.per_utterance) {
    ordered_json ju;
    ju["id"] = u.id;
    ju["edit"] = edit_json(u.edit);
    ju["mdd"] = mdd_json(u.mdd);
    ju["insertions_excluded"] = u.mdd.insertions_excluded;
    per.push_back(std::move(ju));
  }
  j["per_utterance"] = std::move(per);
  ordered_json agg;
  agg["edit"] = edit_json(report.edit);
  agg["mdd"] = mdd_json(report.mdd);
  agg["insertions_excluded"] = report.mdd.insertions_excluded;
  j["aggregate"] = std::move(agg);
  return j.dump(2);
}

std::string report_table(const CorpusReport& report, const std::string& row_label) {
  MddMetrics m = mdd_metrics(report.mdd);
  std::optional<double> corr, acc;
  if (report.edit.n > 0) {
    corr = correctness(report.edit);
    acc = accuracy(report.edit);
  }
  std::ostringstream os;
  os << "model correctness accuracy FRR FAR detection_accuracy precision recall f_measure DER\n";
  os << row_label << " " << fmt_metric(corr) << " " << fmt_metric(acc) << " " << fmt_metric(m.frr) << " "
     << fmt_metric(m.far) << " " << fmt_metric(m.detection_accuracy) << " " << fmt_metric(m.precision) << " "
     << fmt_metric(m.recall) << " " << fmt_metric(m.f_measure) << " " << fmt_metric(m.der) << "\n";
  return os.str();
}

}  // namespace apl
