#include "crowd/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "crowd/csv.hpp"
#include "crowd/error.hpp"

namespace crowd {

const char* stage_name(Stage s) noexcept {
    switch (s) {
        case Stage::I1: return "i1";
        case Stage::C: return "c";
        case Stage::I2: return "i2";
    }
    return "?";
}

Stage parse_stage(std::string_view token) {
    const std::string t = csv::lower(csv::trim(token));
    if (t == "i1") return Stage::I1;
    if (t == "c") return Stage::C;
    if (t == "i2") return Stage::I2;
    throw Error(Errc::UnknownStage, "unknown stage '" + std::string(token) + "'");
}

const Answer* GroupRecord::answer(Stage s, const std::string& question, std::size_t member) const {
    const auto& table = s == Stage::I2 ? i2 : i1;
    if (s == Stage::C) return nullptr;
    auto it = table.find(question);
    if (it == table.end() || member >= it->second.size()) return nullptr;
    return &it->second[member];
}

const Question* Dataset::question(std::string_view code) const {
    for (const auto& q : questions)
        if (q.code == code) return &q;
    return nullptr;
}

std::vector<const Question*> Dataset::discussed() const {
    std::vector<const Question*> out;
    for (const auto& q : questions)
        if (q.discussed) out.push_back(&q);
    return out;
}

namespace {

bool parse_bool(const std::string& s, bool& out) {
    const std::string t = csv::lower(csv::trim(s));
    if (t == "yes" || t == "true" || t == "1") return out = true, true;
    if (t == "no" || t == "false" || t == "0") return out = false, true;
    return false;
}

std::optional<double> parse_opt_double(const std::string& cell, std::size_t line) {
    const std::string t = csv::trim(cell);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    if (!csv::parse_double(t, v)) throw Error(Errc::MalformedRow, "bad number '" + t + "'", line);
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return in;
}

}  // namespace

std::vector<Question> read_questions(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<Question> out;
    std::set<std::string> seen;
    std::unordered_map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (!cells) throw Error(Errc::MalformedRow, "unterminated quote", lineno);
        if (col.empty()) {
            for (std::size_t i = 0; i < cells->size(); ++i) col[csv::lower(csv::trim((*cells)[i]))] = i;
            for (const char* need : {"code", "truth", "discussed"})
                if (!col.count(need))
                    throw Error(Errc::MalformedRow, std::string("question table lacks column ") + need, lineno);
            continue;
        }
        auto cell = [&](const char* name) -> std::string {
            auto it = col.find(name);
            if (it == col.end() || it->second >= cells->size()) return {};
            return (*cells)[it->second];
        };
        Question q;
        q.code = csv::trim(cell("code"));
        q.text = cell("text");
        if (q.code.empty()) throw Error(Errc::MalformedRow, "empty question code", lineno);
        if (!seen.insert(q.code).second) throw Error(Errc::MalformedRow, "duplicate question " + q.code, lineno);
        if (!csv::parse_double(csv::trim(cell("truth")), q.truth) || !(q.truth > 0.0))
            throw Error(Errc::MalformedRow, "truth must be a positive number", lineno);
        if (!parse_bool(cell("discussed"), q.discussed))
            throw Error(Errc::MalformedRow, "discussed must be yes/no", lineno);
        q.median_i1 = parse_opt_double(cell("median_i1"), lineno);
        q.mad_i1 = parse_opt_double(cell("mad_i1"), lineno);
        out.push_back(std::move(q));
    }
    if (out.empty()) throw Error(Errc::EmptyInput, "question table is empty");
    return out;
}

std::vector<Question> load_questions(const std::string& path) {
    auto in = open_input(path);
    return read_questions(in);
}

void write_questions(std::ostream& out, const std::vector<Question>& qs) {
    out << "code,text,truth,discussed,median_i1,mad_i1\n";
    for (const auto& q : qs) {
        out << csv::quote(q.code) << ',' << csv::quote(q.text) << ',' << csv::format_double(q.truth) << ','
            << (q.discussed ? "yes" : "no") << ',' << (q.median_i1 ? csv::format_double(*q.median_i1) : "")
            << ',' << (q.mad_i1 ? csv::format_double(*q.mad_i1) : "") << '\n';
    }
}

Dataset assemble_dataset(std::vector<Question> questions, std::vector<EstimateRecord> records) {
    Dataset ds;
    ds.questions = std::move(questions);

    std::map<std::string, std::set<std::string>> members;
    for (const auto& r : records)
        if (!r.group_id.empty() && r.role == Role::Player) members[r.group_id].insert(r.participant_id);

    std::map<std::string, GroupRecord> groups;
    for (const auto& [gid, ids] : members) {
        GroupRecord g;
        g.group_id = gid;
        g.members.assign(ids.begin(), ids.end());
        groups.emplace(gid, std::move(g));
    }

    for (const auto& r : records) {
        if (r.role == Role::Moderator) {
            if (r.stage != Stage::C) {
                ds.unaffiliated.push_back(r);
                continue;
            }
            GroupRecord& g = groups[r.group_id];
            g.group_id = r.group_id;
            if (g.moderator.empty()) g.moderator = r.participant_id;
            g.consensus.try_emplace(r.question_code, Consensus{r.estimate, r.no_consensus});
            continue;
        }
        if (r.group_id.empty()) {
            ds.unaffiliated.push_back(r);
            continue;
        }
        GroupRecord& g = groups[r.group_id];
        auto& table = r.stage == Stage::I2 ? g.i2 : g.i1;
        auto& row = table[r.question_code];
        row.resize(g.members.size());
        auto pos = std::lower_bound(g.members.begin(), g.members.end(), r.participant_id);
        auto idx = static_cast<std::size_t>(pos - g.members.begin());
        // first row wins; later duplicates show up in validate_dataset
        Answer& a = row[idx];
        if (!a.estimate && !a.confidence) a = Answer{r.estimate, r.confidence};
    }

    ds.groups.reserve(groups.size());
    for (auto& [gid, g] : groups) ds.groups.push_back(std::move(g));
    ds.records = std::move(records);
    return ds;
}

Dataset read_dataset(std::istream& in, const std::vector<Question>& questions, const ColumnMap& schema) {
    std::set<std::string> codes;
    for (const auto& q : questions) codes.insert(q.code);

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::size_t> idx;  // logical column -> cell index
    std::size_t width = 0;
    std::vector<EstimateRecord> records;

    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (!cells) throw Error(Errc::MalformedRow, "unterminated quote", lineno);
        if (idx.empty()) {
            const std::string names[] = {schema.participant_id, schema.group_id, schema.role,
                                         schema.question_code, schema.stage, schema.estimate,
                                         schema.confidence};
            for (const auto& n : names) {
                auto it = std::find_if(cells->begin(), cells->end(),
                                       [&](const std::string& c) { return csv::trim(c) == n; });
                if (it == cells->end()) throw Error(Errc::MalformedRow, "missing column " + n, lineno);
                idx.push_back(static_cast<std::size_t>(it - cells->begin()));
            }
            width = cells->size();
            continue;
        }
        if (cells->size() != width)
            throw Error(Errc::MalformedRow,
                        "expected " + std::to_string(width) + " fields, got " + std::to_string(cells->size()),
                        lineno);
        auto cell = [&](int k) { return csv::trim((*cells)[idx[static_cast<std::size_t>(k)]]); };

        EstimateRecord r;
        r.participant_id = cell(0);
        r.group_id = cell(1);
        const std::string role = csv::lower(cell(2));
        if (role == "player") r.role = Role::Player;
        else if (role == "moderator") r.role = Role::Moderator;
        else throw Error(Errc::MalformedRow, "unknown role '" + cell(2) + "'", lineno);
        r.question_code = cell(3);
        if (!codes.count(r.question_code))
            throw Error(Errc::MalformedRow, "unknown question '" + r.question_code + "'", lineno);
        try {
            r.stage = parse_stage(cell(4));
        } catch (const Error& e) {
            throw Error(Errc::UnknownStage, e.what(), lineno);
        }
        if (r.participant_id.empty()) throw Error(Errc::MalformedRow, "empty participant id", lineno);
        if (r.stage == Stage::C && r.role != Role::Moderator)
            throw Error(Errc::MalformedRow, "stage c rows are recorded by the moderator", lineno);
        if (r.stage == Stage::C && r.group_id.empty())
            throw Error(Errc::MalformedRow, "stage c row without group", lineno);

        const std::string est = cell(5);
        if (r.stage == Stage::C && (est == "X" || est == "x")) {
            r.no_consensus = true;
        } else if (!est.empty()) {
            double v = 0.0;
            if (!csv::parse_double(est, v)) throw Error(Errc::MalformedRow, "bad estimate '" + est + "'", lineno);
            if (v < 0.0) throw Error(Errc::NegativeEstimate, "negative estimate " + est, lineno);
            r.estimate = v;
        }

        const std::string conf = cell(6);
        if (!conf.empty()) {
            if (r.stage == Stage::C) throw Error(Errc::MalformedRow, "stage c rows carry no confidence", lineno);
            int c = 0;
            if (!csv::parse_int(conf, c)) throw Error(Errc::MalformedRow, "bad confidence '" + conf + "'", lineno);
            if (c < 0 || c > 10) throw Error(Errc::ConfidenceOutOfRange, "confidence " + conf + " outside [0,10]", lineno);
            r.confidence = c;
        }
        records.push_back(std::move(r));
    }
    return assemble_dataset(questions, std::move(records));
}

Dataset parse_dataset(const std::string& path, const std::vector<Question>& questions, const ColumnMap& schema) {
    auto in = open_input(path);
    return read_dataset(in, questions, schema);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
    out << "participant_id,group_id,role,question_code,stage,estimate,confidence\n";
    for (const auto& r : ds.records) {
        out << csv::quote(r.participant_id) << ',' << csv::quote(r.group_id) << ','
            << (r.role == Role::Moderator ? "moderator" : "player") << ',' << csv::quote(r.question_code) << ','
            << stage_name(r.stage) << ',';
        if (r.no_consensus) out << 'X';
        else if (r.estimate) out << csv::format_double(*r.estimate);
        out << ',';
        if (r.confidence) out << *r.confidence;
        out << '\n';
    }
}

bool is_complete(const GroupRecord& g, const Dataset& ds) {
    if (g.members.size() != 5) return false;
    for (const auto& q : ds.questions) {
        if (!q.discussed) continue;
        for (const auto* table : {&g.i1, &g.i2}) {
            auto it = table->find(q.code);
            if (it == table->end() || it->second.size() != 5) return false;
            for (const auto& a : it->second)
                if (!a.estimate) return false;
        }
        auto c = g.consensus.find(q.code);
        if (c == g.consensus.end() || c->second.no_consensus || !c->second.value) return false;
    }
    return true;
}

std::vector<GroupRecord> complete_groups(const Dataset& ds) {
    std::vector<GroupRecord> out;
    for (const auto& g : ds.groups)
        if (is_complete(g, ds)) out.push_back(g);
    return out;
}

const char* issue_name(IssueKind k) noexcept {
    switch (k) {
        case IssueKind::DuplicateRecord: return "DuplicateRecord";
        case IssueKind::GroupSizeViolation: return "GroupSizeViolation";
        case IssueKind::NoResponses: return "NoResponses";
    }
    return "?";
}

std::vector<Issue> validate_dataset(const Dataset& ds) {
    std::vector<Issue> out;
    std::set<std::tuple<std::string, std::string, Stage>> seen;
    std::set<std::string> answered;
    for (const auto& r : ds.records) {
        if (r.estimate) answered.insert(r.question_code);
        if (!seen.insert({r.participant_id, r.question_code, r.stage}).second)
            out.push_back({IssueKind::DuplicateRecord,
                           r.participant_id + "/" + r.question_code + "/" + stage_name(r.stage), "repeated row"});
    }
    for (const auto& g : ds.groups)
        if (g.members.size() != 5)
            out.push_back({IssueKind::GroupSizeViolation, g.group_id,
                           std::to_string(g.members.size()) + " players"});
    for (const auto& q : ds.questions)
        if (!answered.count(q.code)) out.push_back({IssueKind::NoResponses, q.code, "no numeric answers"});
    return out;
}

std::vector<double> crowd_responses(const Dataset& ds, const std::string& question, Stage stage) {
    std::vector<double> out;
    if (stage == Stage::C) {
        for (const auto& g : ds.groups) {
            auto it = g.consensus.find(question);
            if (it != g.consensus.end() && it->second.value) out.push_back(*it->second.value);
        }
        return out;
    }
    for (const auto& g : ds.groups) {
        const auto& table = stage == Stage::I2 ? g.i2 : g.i1;
        auto it = table.find(question);
        if (it == table.end()) continue;
        for (const auto& a : it->second)
            if (a.estimate) out.push_back(*a.estimate);
    }
    for (const auto& r : ds.unaffiliated)
        if (r.question_code == question && r.stage == stage && r.estimate) out.push_back(*r.estimate);
    return out;
}

}  // namespace crowd
