#include <fmt/format.h>
#include <sstream>

#include "forged/losocv.hpp"

namespace forged {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadSpec, fmt::format("report line {}: '{}' is not a number", line_no, s));
  }
}

constexpr std::string_view kHeader = "subject_id,label,train_loss,train_acc,test_loss,test_acc,pred,correct";

}  // namespace

std::string render_report(const LosocvReport& r) {
  std::string out;
  out += fmt::format("{:<6} {:<12} {:>10} {:>13} {:>10} {:>12} {:>6} {:>10} {:>12}\n", "Type", "Subject",
                     "Train Loss", "Train Acc (%)", "Test Loss", "Test Acc (%)", "Pred.", "Epoch Loss",
                     "Epoch Acc (%)");
  for (const auto& f : r.folds) {
    out += fmt::format("{:<6} {:<12} {:>10.3f} {:>13.2f} {:>10.3f} {:>12.2f} {:>6} {:>10.3f} {:>12.2f}{}\n",
                       to_string(f.label), f.subject_id, f.train_loss, 100.0 * f.train_acc, f.test_loss,
                       100.0 * f.test_acc, to_string(f.predicted), f.final_epoch_loss, 100.0 * f.final_epoch_acc,
                       f.correct ? "" : "  (wrong)");
  }
  out += fmt::format("{:<19} {:>10.3f} {:>13.2f} {:>10.3f} {:>12.2f} {:>6.2f} (%)\n", "Average", r.mean_train_loss,
                     100.0 * r.mean_train_acc, r.mean_test_loss, 100.0 * r.mean_test_acc, 100.0 * r.subject_accuracy);
  return out;
}

std::string report_csv(const LosocvReport& r) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& f : r.folds) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", f.subject_id, to_string(f.label), f.train_loss, f.train_acc,
                       f.test_loss, f.test_acc, to_string(f.predicted), f.correct ? 1 : 0);
  }
  out += fmt::format("Average,,{},{},{},{},{},\n", r.mean_train_loss, r.mean_train_acc, r.mean_test_loss,
                     r.mean_test_acc, r.subject_accuracy);
  return out;
}

LosocvReport parse_report_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw Error(ErrorCode::BadMagic, "report header missing");
  LosocvReport r;
  bool saw_average = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (saw_average) throw Error(ErrorCode::BadSpec, fmt::format("report line {}: data after Average", line_no));
    const auto cells = split_csv(line);
    if (cells.size() != 8) {
      throw Error(ErrorCode::BadSpec, fmt::format("report line {}: {} columns, expected 8", line_no, cells.size()));
    }
    if (cells[0] == "Average") {
      r.mean_train_loss = parse_double(cells[2], line_no);
      r.mean_train_acc = parse_double(cells[3], line_no);
      r.mean_test_loss = parse_double(cells[4], line_no);
      r.mean_test_acc = parse_double(cells[5], line_no);
      r.subject_accuracy = parse_double(cells[6], line_no);
      saw_average = true;
      continue;
    }
    FoldResult f;
    f.subject_id = cells[0];
    f.label = parse_label(cells[1]);
    f.train_loss = parse_double(cells[2], line_no);
    f.train_acc = parse_double(cells[3], line_no);
    f.test_loss = parse_double(cells[4], line_no);
    f.test_acc = parse_double(cells[5], line_no);
    f.predicted = parse_label(cells[6]);
    f.correct = cells[7] == "1";
    r.folds.push_back(std::move(f));
  }
  if (!saw_average) throw Error(ErrorCode::TruncatedFile, "report has no Average row");
  return r;
}

}  // namespace forged
