#include "spectra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace spectra {

ConfusionMatrix::ConfusionMatrix(int k, std::vector<std::string> class_names)
    : k_(k), names_(std::move(class_names)), counts_(static_cast<std::size_t>(k) * k, 0) {
    if (k < 1) throw EmptyMatrix("ConfusionMatrix: need at least one class");
    if (names_.empty())
        for (int i = 0; i < k_; ++i) names_.push_back("class" + std::to_string(i));
    if (static_cast<int>(names_.size()) != k_)
        throw ShapeMismatch("ConfusionMatrix: class name count does not match k");
}

ConfusionMatrix::ConfusionMatrix(const std::vector<std::vector<std::int64_t>>& counts,
                                 std::vector<std::string> class_names)
    : ConfusionMatrix(static_cast<int>(counts.size()), std::move(class_names)) {
    for (int t = 0; t < k_; ++t) {
        if (static_cast<int>(counts[t].size()) != k_)
            throw ShapeMismatch("ConfusionMatrix: counts must be square");
        for (int p = 0; p < k_; ++p) {
            if (counts[t][p] < 0) throw ShapeMismatch("ConfusionMatrix: negative count");
            counts_[static_cast<std::size_t>(t) * k_ + p] = counts[t][p];
        }
    }
}

void ConfusionMatrix::add(int truth, int pred, std::int64_t n) {
    if (truth < 0 || truth >= k_ || pred < 0 || pred >= k_)
        throw LabelOutOfRange("ConfusionMatrix::add: label outside 0.." + std::to_string(k_ - 1));
    counts_[static_cast<std::size_t>(truth) * k_ + pred] += n;
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
    std::int64_t s = 0;
    for (int p = 0; p < k_; ++p) s += at(truth, p);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(int pred) const {
    std::int64_t s = 0;
    for (int t = 0; t < k_; ++t) s += at(t, pred);
    return s;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (int t = 0; t < k_; ++t) s += at(t, t);
    return s;
}

ConfusionMatrix confusion_from_records(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw EmptyInput("confusion_from_records: no records");
    ConfusionMatrix cm(ClassLabel::kCount,
                       {ClassLabel::names().begin(), ClassLabel::names().end()});
    for (const PredictionRecord& r : records) {
        if (r.truth.index < 0 || r.truth.index >= cm.k() || r.predicted.index < 0 ||
            r.predicted.index >= cm.k())
            throw LabelOutOfRange("confusion_from_records: record " + r.id +
                                  " has label outside 0..3");
        cm.add(r.truth.index, r.predicted.index);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw EmptyMatrix("accuracy: empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double balanced_accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyMatrix("balanced_accuracy: empty confusion matrix");
    double sum = 0.0;
    for (int t = 0; t < cm.k(); ++t) {
        const std::int64_t row = cm.row_sum(t);
        if (row == 0)
            throw EmptyClass("balanced_accuracy: class " + cm.class_names()[t] +
                             " has zero truth count");
        sum += static_cast<double>(cm.at(t, t)) / static_cast<double>(row);
    }
    return sum / cm.k();
}

double mcc_multiclass(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw EmptyMatrix("mcc_multiclass: empty confusion matrix");
    const double s = static_cast<double>(total);
    const double c = static_cast<double>(cm.trace());
    double sum_pt = 0.0, sum_p2 = 0.0, sum_t2 = 0.0;
    for (int k = 0; k < cm.k(); ++k) {
        const double pk = static_cast<double>(cm.col_sum(k));
        const double tk = static_cast<double>(cm.row_sum(k));
        sum_pt += pk * tk;
        sum_p2 += pk * pk;
        sum_t2 += tk * tk;
    }
    const double var_p = s * s - sum_p2;
    const double var_t = s * s - sum_t2;
    if (var_p <= 0.0 || var_t <= 0.0) return 0.0; // single-class degenerate case
    return (c * s - sum_pt) / std::sqrt(var_p * var_t);
}

MacroF1Result macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyMatrix("macro_f1: empty confusion matrix");
    MacroF1Result res{0.0, {}};
    for (int t = 0; t < cm.k(); ++t) {
        const std::int64_t col = cm.col_sum(t), row = cm.row_sum(t);
        const double diag = static_cast<double>(cm.at(t, t));
        const double precision = col == 0 ? 0.0 : diag / static_cast<double>(col);
        const double recall = row == 0 ? 0.0 : diag / static_cast<double>(row);
        const double f1 =
            (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        res.per_class.push_back({cm.class_names()[t], precision, recall, f1});
        res.macro_f1 += f1;
    }
    res.macro_f1 /= cm.k();
    return res;
}

double auc_binary(const std::vector<double>& scores, const std::vector<bool>& is_positive) {
    if (scores.size() != is_positive.size())
        throw ShapeMismatch("auc_binary: scores and labels differ in length");
    std::int64_t n_pos = 0, n_neg = 0;
    for (bool p : is_positive) (p ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateClass("auc_binary: need at least one positive and one negative");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j)); // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (is_positive[idx[k]]) rank_sum_pos += midrank;
        i = j;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_ovr_macro(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw EmptyInput("auc_ovr_macro: no records");
    for (const PredictionRecord& r : records)
        if (!r.scores)
            throw MissingColumn("auc_ovr_macro: record " + r.id + " has no score vector");

    double sum = 0.0;
    for (int c = 0; c < ClassLabel::kCount; ++c) {
        std::vector<double> scores;
        std::vector<bool> positives;
        scores.reserve(records.size());
        positives.reserve(records.size());
        std::int64_t n_pos = 0, n_neg = 0;
        for (const PredictionRecord& r : records) {
            const bool positive = r.truth.index == c;
            scores.push_back((*r.scores)[c]);
            positives.push_back(positive);
            (positive ? n_pos : n_neg) += 1;
        }
        if (n_pos == 0 || n_neg == 0)
            throw DegenerateClass("auc_ovr_macro: class " + ClassLabel::names()[c] + " has no " +
                                  (n_pos == 0 ? "positive" : "negative") + " examples");
        sum += auc_binary(scores, positives);
    }
    return sum / ClassLabel::kCount;
}

MetricsReport compute_report(const std::vector<PredictionRecord>& records) {
    const ConfusionMatrix cm = confusion_from_records(records);
    MetricsReport rep;
    rep.accuracy = accuracy(cm);
    rep.balanced_accuracy = balanced_accuracy(cm);
    rep.mcc = mcc_multiclass(cm);
    MacroF1Result f1 = macro_f1(cm);
    rep.macro_f1 = f1.macro_f1;
    rep.per_class = std::move(f1.per_class);
    const bool all_scored =
        std::all_of(records.begin(), records.end(), [](const auto& r) { return r.scores.has_value(); });
    if (all_scored) rep.auc_ovr_macro = auc_ovr_macro(records);
    rep.class_names = cm.class_names();
    rep.confusion.assign(cm.k(), std::vector<std::int64_t>(cm.k(), 0));
    for (int t = 0; t < cm.k(); ++t)
        for (int p = 0; p < cm.k(); ++p) rep.confusion[t][p] = cm.at(t, p);
    return rep;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

ClassLabel parse_label(const std::string& raw, int lineno) {
    // Bare index or canonical name.
    if (!raw.empty() && raw.find_first_not_of("0123456789") == std::string::npos) {
        const int idx = std::stoi(raw);
        if (idx < 0 || idx >= ClassLabel::kCount)
            throw LabelOutOfRange("line " + std::to_string(lineno) + ": label index " + raw +
                                  " outside 0..3");
        return ClassLabel{idx};
    }
    const int idx = ClassLabel::match(raw);
    if (idx < 0)
        throw ParseError("line " + std::to_string(lineno) + ": unknown class label '" + raw + "'");
    return ClassLabel{idx};
}

} // namespace

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("no such predictions file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty predictions file");
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> base = {"id", "true_label", "pred_label"};
    const std::vector<std::string> scores = {"score_0", "score_1", "score_2", "score_3"};

    bool has_scores;
    if (header.size() == base.size()) {
        has_scores = false;
    } else if (header.size() == base.size() + scores.size()) {
        has_scores = true;
    } else {
        throw ParseError("line 1: expected 3 or 7 columns, got " + std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < base.size(); ++i)
        if (header[i] != base[i]) throw MissingColumn("line 1: expected column '" + base[i] + "'");
    if (has_scores)
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (header[base.size() + i] != scores[i])
                throw MissingColumn("line 1: expected column '" + scores[i] + "'");

    std::vector<PredictionRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != header.size())
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
        PredictionRecord rec;
        rec.id = f[0];
        rec.truth = parse_label(f[1], lineno);
        rec.predicted = parse_label(f[2], lineno);
        if (has_scores) {
            std::array<double, ClassLabel::kCount> s;
            for (int i = 0; i < ClassLabel::kCount; ++i) {
                try {
                    std::size_t pos = 0;
                    s[i] = std::stod(f[3 + i], &pos);
                    if (pos != f[3 + i].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw ParseError("line " + std::to_string(lineno) + ": bad score '" +
                                     f[3 + i] + "'");
                }
                if (!std::isfinite(s[i]))
                    throw ParseError("line " + std::to_string(lineno) + ": non-finite score");
            }
            const int argmax = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
            if (argmax != rec.predicted.index)
                throw ParseError("line " + std::to_string(lineno) + ": pred_label " +
                                 rec.predicted.name() + " disagrees with score argmax " +
                                 ClassLabel{argmax}.name());
            rec.scores = s;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

std::string report_to_json(const MetricsReport& report) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"accuracy\": " << fmt6(report.accuracy) << ",\n";
    out << "  \"balanced_accuracy\": " << fmt6(report.balanced_accuracy) << ",\n";
    out << "  \"mcc\": " << fmt6(report.mcc) << ",\n";
    out << "  \"macro_f1\": " << fmt6(report.macro_f1) << ",\n";
    out << "  \"per_class\": [\n";
    for (std::size_t i = 0; i < report.per_class.size(); ++i) {
        const PerClassStats& pc = report.per_class[i];
        out << "    {\"name\": \"" << pc.name << "\", \"precision\": " << fmt6(pc.precision)
            << ", \"recall\": " << fmt6(pc.recall) << ", \"f1\": " << fmt6(pc.f1) << "}"
            << (i + 1 < report.per_class.size() ? "," : "") << "\n";
    }
    out << "  ],\n";
    if (report.auc_ovr_macro)
        out << "  \"auc_ovr_macro\": " << fmt6(*report.auc_ovr_macro) << ",\n";
    out << "  \"confusion\": [\n";
    for (std::size_t t = 0; t < report.confusion.size(); ++t) {
        out << "    [";
        for (std::size_t p = 0; p < report.confusion[t].size(); ++p)
            out << report.confusion[t][p] << (p + 1 < report.confusion[t].size() ? ", " : "");
        out << "]" << (t + 1 < report.confusion.size() ? "," : "") << "\n";
    }
    out << "  ]\n";
    out << "}\n";
    return out.str();
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << report_to_json(report);
    if (!out) throw IoFailure("write failed: " + path.string());
}

} // namespace spectra
