#include "crowd/panel.hpp"

#include <cmath>
#include <limits>

namespace crowd {

bool GroupData::has_confidence() const {
    for (int c : confidence)
        if (c < 0) return false;
    return true;
}

double GroupData::mean(Stage s) const {
    if (s == Stage::C) return consensus;
    const auto& v = s == Stage::I1 ? i1 : i2;
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / 5.0;
}

QuestionPanel build_panel(const Dataset& ds, const Question& q, const PanelOptions& opt) {
    QuestionPanel p;
    p.question = q;
    const auto all_i1 = crowd_responses(ds, q.code, Stage::I1);
    p.params = fit_params(all_i1);
    auto ok = [&](double x) { return within_threshold(x, p.params, opt.threshold); };
    auto spill = [&](const GroupRecord& g) {
        for (const auto* table : {&g.i1, &g.i2}) {
            auto it = table->find(q.code);
            if (it == table->end()) continue;
            auto& dst = table == &g.i1 ? p.others_i1 : p.others_i2;
            for (const auto& a : it->second)
                if (a.estimate && ok(*a.estimate)) dst.push_back(*a.estimate);
        }
    };
    for (const auto& g : ds.groups) {
        auto a1 = g.i1.find(q.code);
        auto a2 = g.i2.find(q.code);
        if (!is_complete(g, ds) || a1 == g.i1.end() || a2 == g.i2.end() || a1->second.size() != 5 ||
            a2->second.size() != 5) {
            spill(g);
            continue;
        }
        GroupData d;
        d.group_id = g.group_id;
        bool keep = true;
        for (std::size_t i = 0; i < 5 && keep; ++i) {
            const Answer& x = a1->second[i];
            const Answer& r = a2->second[i];
            if (!x.estimate || !r.estimate || !ok(*x.estimate) || !ok(*r.estimate)) keep = false;
            else {
                d.i1[i] = *x.estimate;
                d.i2[i] = *r.estimate;
                d.confidence[i] = x.confidence.value_or(-1);
            }
        }
        d.consensus = std::numeric_limits<double>::quiet_NaN();
        if (keep && q.discussed) {
            auto c = g.consensus.find(q.code);
            if (c == g.consensus.end() || !c->second.value || !ok(*c->second.value)) keep = false;
            else d.consensus = *c->second.value;
        }
        if (keep) p.groups.push_back(std::move(d));
        else spill(g);
    }
    for (const auto& r : ds.unaffiliated) {
        if (r.question_code != q.code || !r.estimate || !ok(*r.estimate)) continue;
        if (r.stage == Stage::I1) p.others_i1.push_back(*r.estimate);
        else if (r.stage == Stage::I2) p.others_i2.push_back(*r.estimate);
    }
    return p;
}

std::vector<double> QuestionPanel::crowd(Stage s) const {
    std::vector<double> out;
    if (s == Stage::C) {
        for (const auto& g : groups) out.push_back(g.consensus);
        return out;
    }
    out.reserve(groups.size() * 5 + others_i1.size());
    for (const auto& g : groups)
        for (double x : (s == Stage::I1 ? g.i1 : g.i2)) out.push_back(x);
    const auto& rest = s == Stage::I1 ? others_i1 : others_i2;
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

std::vector<QuestionPanel> build_panels(const Dataset& ds, const PanelOptions& opt) {
    std::vector<QuestionPanel> out;
    for (const auto& q : ds.questions)
        if (q.discussed || !opt.discussed_only) out.push_back(build_panel(ds, q, opt));
    return out;
}

}  // namespace crowd
