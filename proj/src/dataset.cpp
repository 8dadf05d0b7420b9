#include "raremeta/dataset.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "raremeta/error.hpp"

namespace raremeta {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::int64_t parse_count(std::string_view field, std::size_t line_no, const char* column) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": column " + column +
                                      " is not an integer ('" + std::string(field) + "')");
  }
  return value;
}

}  // namespace

void validate_arm(const StudyArm& arm, std::string_view where) {
  const std::string prefix = where.empty() ? std::string() : std::string(where) + ": ";
  if (arm.total < 1) {
    throw_invalid(prefix + "violates total >= 1 (total = " + std::to_string(arm.total) + ")");
  }
  if (arm.events < 0) {
    throw_invalid(prefix + "violates events >= 0 (events = " + std::to_string(arm.events) + ")");
  }
  if (arm.events > arm.total) {
    throw_invalid(prefix + "violates events <= total (" + std::to_string(arm.events) + " > " +
                  std::to_string(arm.total) + ")");
  }
}

MetaDataset::MetaDataset(std::vector<Study> studies) : studies_(std::move(studies)) {
  if (studies_.empty()) throw_invalid("dataset must contain at least 1 study");
  std::set<std::string> labels;
  for (const auto& s : studies_) {
    validate_arm(s.control, "study '" + s.label + "' control arm");
    validate_arm(s.experimental, "study '" + s.label + "' experimental arm");
    if (!labels.insert(s.label).second) {
      throw_invalid("study labels must be unique ('" + s.label + "' repeated)");
    }
  }
}

MetaDataset parse_dataset_csv(std::string_view text) {
  static constexpr const char* kColumns[] = {"study", "r_ctrl", "n_ctrl", "r_trt", "n_trt"};
  std::vector<Study> studies;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_fields(line);
    if (!header_seen) {
      header_seen = true;
      bool matches = fields.size() == 5;
      for (std::size_t c = 0; matches && c < 5; ++c) matches = fields[c] == kColumns[c];
      if (!matches) {
        throw Error(ErrorCode::parse, "line " + std::to_string(line_no) +
                                          ": expected header study,r_ctrl,n_ctrl,r_trt,n_trt");
      }
      continue;
    }
    if (fields.size() != 5) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected 5 fields, got " +
                                        std::to_string(fields.size()) +
                                        " (each study needs both arms)");
    }
    for (std::size_t c = 1; c < 5; ++c) {
      if (fields[c].empty() || fields[c] == "-" || fields[c] == "NA") {
        throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": missing value for " +
                                          kColumns[c] + " (each study needs both arms)");
      }
    }
    Study study;
    study.label = std::string(fields[0]);
    if (study.label.empty()) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": empty study label");
    }
    study.control = {parse_count(fields[1], line_no, kColumns[1]),
                     parse_count(fields[2], line_no, kColumns[2])};
    study.experimental = {parse_count(fields[3], line_no, kColumns[3]),
                          parse_count(fields[4], line_no, kColumns[4])};
    try {
      validate_arm(study.control, "control arm");
      validate_arm(study.experimental, "experimental arm");
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    studies.push_back(std::move(study));
  }
  if (studies.empty()) {
    throw Error(ErrorCode::parse, "dataset must contain at least 1 study");
  }
  try {
    return MetaDataset(std::move(studies));
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, e.what());
  }
}

MetaDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open dataset '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_csv(buffer.str());
}

}  // namespace raremeta
