#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crowd {

enum class Stage { I1, C, I2 };
enum class Role { Player, Moderator };

const char* stage_name(Stage s) noexcept;  // "i1", "c", "i2"
Stage parse_stage(std::string_view token);  // case-insensitive, throws UnknownStage

struct Question {
    std::string code;
    std::string text;
    double truth = 0.0;
    bool discussed = false;
    // Reference i1 statistics from the calibration table (absent for ad hoc catalogs).
    std::optional<double> median_i1;
    std::optional<double> mad_i1;

    bool operator==(const Question&) const = default;
};

struct EstimateRecord {
    std::string participant_id;
    std::string group_id;
    Role role = Role::Player;
    std::string question_code;
    Stage stage = Stage::I1;
    std::optional<double> estimate;
    bool no_consensus = false;  // 'X' in a stage-c cell
    std::optional<int> confidence;

    bool operator==(const EstimateRecord&) const = default;
};

struct Answer {
    std::optional<double> estimate;
    std::optional<int> confidence;

    bool operator==(const Answer&) const = default;
};

struct Consensus {
    std::optional<double> value;
    bool no_consensus = false;

    bool operator==(const Consensus&) const = default;
};

struct GroupRecord {
    std::string group_id;
    std::vector<std::string> members;  // sorted
    std::string moderator;
    // per question, aligned with members
    std::map<std::string, std::vector<Answer>> i1;
    std::map<std::string, std::vector<Answer>> i2;
    std::map<std::string, Consensus> consensus;

    const Answer* answer(Stage s, const std::string& question, std::size_t member) const;

    bool operator==(const GroupRecord&) const = default;
};

struct Dataset {
    std::vector<Question> questions;
    std::vector<GroupRecord> groups;            // sorted by group_id
    std::vector<EstimateRecord> unaffiliated;   // no group, or a moderator's own i1/i2 answers
    std::vector<EstimateRecord> records;        // every parsed row, file order

    const Question* question(std::string_view code) const;
    std::vector<const Question*> discussed() const;

    bool operator==(const Dataset&) const = default;
};

// Header names for each logical column; lets callers read files with other labels.
struct ColumnMap {
    std::string participant_id = "participant_id";
    std::string group_id = "group_id";
    std::string role = "role";
    std::string question_code = "question_code";
    std::string stage = "stage";
    std::string estimate = "estimate";
    std::string confidence = "confidence";
};

std::vector<Question> load_questions(const std::string& path);
std::vector<Question> read_questions(std::istream& in);
void write_questions(std::ostream& out, const std::vector<Question>& qs);

Dataset parse_dataset(const std::string& path, const std::vector<Question>& questions,
                      const ColumnMap& schema = {});
Dataset read_dataset(std::istream& in, const std::vector<Question>& questions,
                     const ColumnMap& schema = {});

// Rebuilds groups and unaffiliated lists from records (used by the parser and by synth).
Dataset assemble_dataset(std::vector<Question> questions, std::vector<EstimateRecord> records);

void write_dataset(std::ostream& out, const Dataset& ds);

std::vector<GroupRecord> complete_groups(const Dataset& ds);
bool is_complete(const GroupRecord& g, const Dataset& ds);

enum class IssueKind { DuplicateRecord, GroupSizeViolation, NoResponses };

struct Issue {
    IssueKind kind;
    std::string subject;  // participant/question/stage, group id, or question code
    std::string detail;

    bool operator==(const Issue&) const = default;
};

const char* issue_name(IssueKind k) noexcept;

std::vector<Issue> validate_dataset(const Dataset& ds);

// Every individual answer to `question` at `stage`: group members plus unaffiliated rows.
std::vector<double> crowd_responses(const Dataset& ds, const std::string& question, Stage stage);

}  // namespace crowd
