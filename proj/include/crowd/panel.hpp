#pragma once

#include <array>
#include <string>
#include <vector>

#include "crowd/dataset.hpp"
#include "crowd/normalize.hpp"

namespace crowd {

// One complete group's answers to one question, as plain numbers.
struct GroupData {
    std::string group_id;
    std::array<double, 5> i1{};
    std::array<double, 5> i2{};
    std::array<int, 5> confidence{};  // i1 confidence, -1 when absent
    double consensus = 0.0;           // NaN for undiscussed questions

    bool has_confidence() const;
    double mean(Stage s) const;
};

// Everything the analyses need for one question: i1-fitted params, the
// complete groups whose every answer lies within the outlier threshold, and
// the whole crowd's filtered individual answers.
struct QuestionPanel {
    Question question;
    NormParams params;
    std::vector<GroupData> groups;
    // filtered answers from individuals outside `groups` (incomplete or
    // discarded groups, unaffiliated players, moderators' own answers)
    std::vector<double> others_i1;
    std::vector<double> others_i2;

    std::vector<double> crowd(Stage s) const;  // group members followed by others
};

struct PanelOptions {
    double threshold = kOutlierThreshold;
    bool discussed_only = true;
};

QuestionPanel build_panel(const Dataset& ds, const Question& q, const PanelOptions& opt = {});
std::vector<QuestionPanel> build_panels(const Dataset& ds, const PanelOptions& opt = {});

}  // namespace crowd
