#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace raremeta {

/// Event count and number of patients in one treatment arm.
struct StudyArm {
  std::int64_t events = 0;
  std::int64_t total = 1;
};

struct Study {
  std::string label;
  StudyArm control;
  StudyArm experimental;
};

/// Ordered collection of two-arm studies with binary outcomes.
///
/// Construction validates every arm (0 <= events <= total, total >= 1),
/// requires at least one study and rejects duplicate labels.
class MetaDataset {
 public:
  explicit MetaDataset(std::vector<Study> studies);

  std::size_t size() const noexcept { return studies_.size(); }
  const Study& operator[](std::size_t i) const { return studies_[i]; }
  const std::vector<Study>& studies() const noexcept { return studies_; }

  auto begin() const noexcept { return studies_.begin(); }
  auto end() const noexcept { return studies_.end(); }

 private:
  std::vector<Study> studies_;
};

// Checks the arm invariants; throws Error naming the violated one.
void validate_arm(const StudyArm& arm, std::string_view where);

/// Parses the `study,r_ctrl,n_ctrl,r_trt,n_trt` CSV layout.
MetaDataset parse_dataset_csv(std::string_view text);
MetaDataset read_dataset_csv(const std::string& path);

}  // namespace raremeta
