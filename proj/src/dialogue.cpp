#include "multibot/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "multibot/errors.hpp"

namespace multibot {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const std::set<std::string> urgency_words{"quickly", "fast", "urgent", "hurry", "asap"};
const std::set<std::string> stealth_words{"quietly", "silently", "stealthily", "stealth"};
const std::set<std::string> interjections{"ok", "okay", "hey", "yes", "no", "please", "so", "well", "now",
                                          "then", "alright", "right", "and", "also", "thanks", "great"};

std::string join_tokens(const std::vector<std::string>& tokens)
{
    std::string out;
    for (const std::string& t : tokens) {
        out += (out.empty() ? "" : " ") + t;
    }
    return out;
}

std::string spoken(std::string name)
{
    std::replace(name.begin(), name.end(), '_', ' ');
    return name;
}

bool starts_with(const std::vector<std::string>& tokens, std::size_t at, const std::vector<std::string>& seq)
{
    if (seq.empty() || at + seq.size() > tokens.size()) {
        return false;
    }
    return std::equal(seq.begin(), seq.end(), tokens.begin() + static_cast<std::ptrdiff_t>(at));
}

bool mentions_broadcast(const std::vector<std::string>& tokens)
{
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "both" || tokens[i] == "everyone" ||
            (tokens[i] == "you" && i + 1 < tokens.size() && tokens[i + 1] == "two")) {
            return true;
        }
    }
    return false;
}

LocationKind slot_location_kind(Slot s)
{
    switch (s) {
    case Slot::route: return LocationKind::route;
    case Slot::area: return LocationKind::area;
    default: return LocationKind::waypoint;
    }
}

std::string question_for(Slot s, const std::string& who)
{
    switch (s) {
    case Slot::destination: return "Where should " + who + " go?";
    case Slot::route: return "Which route should " + who + " take?";
    case Slot::area: return "Which area should " + who + " cover?";
    case Slot::leader: return "Who should " + who + " follow?";
    case Slot::robot: return "Which robot should do that?";
    }
    return "Could you say that again?";
}

const char* const off_topic_reply =
    "Sorry, I did not understand that. Try something like \"Husky, go to the gate\" or \"scout route bravo\".";

ojson template_json(const std::optional<TbsTemplate>& t)
{
    if (!t) {
        return nullptr;
    }
    ojson j;
    j["action"] = std::string(to_string(t->action));
    j["loc"] = t->loc ? ojson("$" + std::string(to_string(*t->loc))) : ojson(nullptr);
    j["obj"] = t->obj ? ojson(std::string(to_string(*t->obj))) : ojson(nullptr);
    return j;
}

TbsTemplate template_from(const json& j, std::size_t line)
{
    auto bad = [&](const std::string& what) {
        return ConfigError("corpus line " + std::to_string(line) + ": " + what);
    };
    if (!j.is_object()) {
        throw bad("tbs_template must be an object or null");
    }
    for (const auto& [k, v] : j.items()) {
        if (k != "action" && k != "loc" && k != "obj") {
            throw bad("unknown tbs_template key " + k);
        }
    }
    TbsTemplate t;
    const auto action = parse_action(j.value("action", ""));
    if (!action) {
        throw bad("bad tbs_template action");
    }
    t.action = *action;
    if (j.contains("loc") && !j["loc"].is_null()) {
        const std::string hole = j["loc"].get<std::string>();
        const auto slot = hole.starts_with('$') ? parse_slot(hole.substr(1)) : std::nullopt;
        if (!slot) {
            throw bad("bad loc slot " + hole);
        }
        t.loc = slot;
    }
    if (j.contains("obj") && !j["obj"].is_null()) {
        t.obj = parse_object_class(j["obj"].get<std::string>());
        if (!t.obj) {
            throw bad("bad obj class");
        }
    }
    return t;
}

} // namespace

std::string_view to_string(Category c)
{
    switch (c) {
    case Category::wake: return "wake";
    case Category::navigate: return "navigate";
    case Category::follow: return "follow";
    case Category::inspect: return "inspect";
    case Category::patrol: return "patrol";
    }
    return "wake";
}

std::optional<Category> parse_category(std::string_view s)
{
    for (auto c : {Category::wake, Category::navigate, Category::follow, Category::inspect, Category::patrol}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Slot s)
{
    switch (s) {
    case Slot::destination: return "destination";
    case Slot::route: return "route";
    case Slot::area: return "area";
    case Slot::leader: return "leader";
    case Slot::robot: return "robot";
    }
    return "robot";
}

std::optional<Slot> parse_slot(std::string_view s)
{
    for (auto v : {Slot::destination, Slot::route, Slot::area, Slot::leader, Slot::robot}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    return std::nullopt;
}

std::string_view to_string(AddressingMode m)
{
    return m == AddressingMode::implicit_addressee ? "implicit" : "explicit";
}

std::optional<AddressingMode> parse_addressing_mode(std::string_view s)
{
    if (s == "explicit") {
        return AddressingMode::explicit_addressee;
    }
    if (s == "implicit") {
        return AddressingMode::implicit_addressee;
    }
    return std::nullopt;
}

std::string_view to_string(Disposition d)
{
    switch (d) {
    case Disposition::executed: return "executed";
    case Disposition::clarification: return "clarification";
    case Disposition::wake_ack: return "wake_ack";
    case Disposition::off_topic: return "off_topic";
    }
    return "off_topic";
}

std::optional<Disposition> parse_disposition(std::string_view s)
{
    for (auto d : {Disposition::executed, Disposition::clarification, Disposition::wake_ack, Disposition::off_topic}) {
        if (to_string(d) == s) {
            return d;
        }
    }
    return std::nullopt;
}

std::optional<std::string> TrainingPair::implicit_robot() const
{
    constexpr std::string_view prefix = "implicit:";
    if (robot_binding.starts_with(prefix)) {
        return robot_binding.substr(prefix.size());
    }
    return std::nullopt;
}

Corpus parse_corpus(std::string_view text)
{
    Corpus corpus;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto bad = [&](const std::string& what) { return ConfigError("corpus line " + std::to_string(n) + ": " + what); };
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw bad(e.what());
        }
        static const std::set<std::string> keys{"id",          "utterance",        "category",      "robot_binding",
                                                "response_template", "tbs_template", "required_slots"};
        for (const auto& [k, v] : j.items()) {
            if (!keys.contains(k)) {
                throw bad("unknown key " + k);
            }
        }
        try {
            TrainingPair p;
            p.id = j.at("id").get<int>();
            p.utterance = j.at("utterance").get<std::string>();
            const auto cat = parse_category(j.at("category").get<std::string>());
            if (!cat) {
                throw bad("bad category");
            }
            p.category = *cat;
            p.robot_binding = j.at("robot_binding").get<std::string>();
            p.response_template = j.at("response_template").get<std::string>();
            if (!j.at("tbs_template").is_null()) {
                p.tbs_template = template_from(j["tbs_template"], n);
            }
            for (const json& s : j.at("required_slots")) {
                const auto slot = parse_slot(s.get<std::string>());
                if (!slot) {
                    throw bad("bad slot " + s.dump());
                }
                p.required_slots.insert(*slot);
            }
            corpus.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw bad(e.what());
        }
    }
    return corpus;
}

Corpus load_corpus_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read corpus " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_corpus(ss.str());
}

std::string dump_corpus(const Corpus& corpus)
{
    std::string out;
    for (const TrainingPair& p : corpus) {
        ojson j;
        j["id"] = p.id;
        j["utterance"] = p.utterance;
        j["category"] = std::string(to_string(p.category));
        j["robot_binding"] = p.robot_binding;
        j["response_template"] = p.response_template;
        j["tbs_template"] = template_json(p.tbs_template);
        j["required_slots"] = ojson::array();
        for (Slot s : p.required_slots) {
            j["required_slots"].push_back(std::string(to_string(s)));
        }
        out += j.dump() + "\n";
    }
    return out;
}

std::optional<std::string> check_corpus(const Corpus& corpus, const Roster& roster)
{
    if (corpus.empty()) {
        return "corpus is empty";
    }
    std::set<int> ids;
    for (const TrainingPair& p : corpus) {
        const std::string where = "pair " + std::to_string(p.id);
        if (!ids.insert(p.id).second) {
            return where + ": duplicate id";
        }
        if ((p.category == Category::wake) != !p.tbs_template) {
            return where + ": tbs_template must be absent exactly for wake pairs";
        }
        if (const auto robot = p.implicit_robot()) {
            if (!find_robot(roster, *robot)) {
                return where + ": implicit binding names unknown robot " + *robot;
            }
        } else if (p.robot_binding != "explicit-name" && p.robot_binding != "addressee-context" &&
                   p.robot_binding != "broadcast") {
            return where + ": bad robot_binding " + p.robot_binding;
        }
        if (p.tbs_template && p.tbs_template->loc && !p.required_slots.contains(*p.tbs_template->loc)) {
            return where + ": loc slot is not required";
        }
    }
    return std::nullopt;
}

std::vector<std::string> normalize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    };
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (c == '\'') {
            continue; // "what's" -> "whats"
        }
        if (std::isspace(c) || c == '_' || c == '-' || std::ispunct(c)) {
            flush();
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

TfIdfScorer::TfIdfScorer(const Corpus& corpus) : n_docs_(corpus.size())
{
    std::vector<std::pair<int, std::unordered_map<std::string, double>>> counts;
    for (const TrainingPair& p : corpus) {
        std::unordered_map<std::string, double> tf;
        for (const std::string& t : normalize(p.utterance)) {
            tf[t] += 1.0;
        }
        for (const auto& [t, c] : tf) {
            ++df_[t];
        }
        counts.emplace_back(p.id, std::move(tf));
    }
    for (auto& [id, tf] : counts) {
        Doc d{id, {}, 0.0};
        for (const auto& [t, c] : tf) {
            const double w = c * idf(t);
            d.weights.emplace(t, w);
            d.norm += w * w;
        }
        d.norm = std::sqrt(d.norm);
        docs_.push_back(std::move(d));
    }
}

double TfIdfScorer::idf(const std::string& term) const
{
    const auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + df)) + 1.0;
}

std::vector<Ranked> TfIdfScorer::rank(const std::vector<std::string>& tokens) const
{
    std::unordered_map<std::string, double> q;
    for (const std::string& t : tokens) {
        q[t] += 1.0;
    }
    double qnorm = 0.0;
    for (auto& [t, w] : q) {
        w *= idf(t);
        qnorm += w * w;
    }
    qnorm = std::sqrt(qnorm);

    std::vector<Ranked> out;
    out.reserve(docs_.size());
    for (const Doc& d : docs_) {
        double dot = 0.0;
        for (const auto& [t, w] : q) {
            if (const auto it = d.weights.find(t); it != d.weights.end()) {
                dot += w * it->second;
            }
        }
        const double s = qnorm > 0.0 && d.norm > 0.0 ? std::clamp(dot / (qnorm * d.norm), 0.0, 1.0) : 0.0;
        out.push_back({d.id, s});
    }
    std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
        return a.score != b.score ? a.score > b.score : a.pair_id < b.pair_id;
    });
    return out;
}

std::vector<Ranked> score(const std::vector<std::string>& tokens, const Corpus& corpus)
{
    return TfIdfScorer(corpus).rank(tokens);
}

Slots extract_slots(const std::vector<std::string>& tokens, const WorldMap& map, const Roster& roster)
{
    struct Entry {
        std::vector<std::string> seq;
        std::optional<Slot> slot; // nullopt: buildings
        std::string value;
    };
    std::vector<Entry> gazetteer;
    for (const auto& [name, kind] : map.entity_names()) {
        std::optional<Slot> slot;
        switch (kind) {
        case LocationKind::waypoint: slot = Slot::destination; break;
        case LocationKind::route: slot = Slot::route; break;
        case LocationKind::area: slot = Slot::area; break;
        default: break;
        }
        gazetteer.push_back({normalize(name), slot, name});
    }
    for (const RobotSpec& r : roster) {
        gazetteer.push_back({normalize(r.display_name), Slot::robot, r.id});
        gazetteer.push_back({normalize(r.id), Slot::robot, r.id});
    }

    Slots out;
    for (std::size_t i = 0; i < tokens.size();) {
        const Entry* best = nullptr;
        for (const Entry& e : gazetteer) {
            if (starts_with(tokens, i, e.seq) && (!best || e.seq.size() > best->seq.size())) {
                best = &e;
            }
        }
        if (!best) {
            if (urgency_words.contains(tokens[i])) {
                out.urgency = Urgency::urgent;
            }
            if (stealth_words.contains(tokens[i])) {
                out.stealth = true;
            }
            ++i;
            continue;
        }
        if (best->slot == Slot::robot) {
            out.robots.push_back(best->value);
        } else if (best->slot) {
            out.values.try_emplace(*best->slot, best->value);
        }
        i += best->seq.size();
    }
    if (!out.robots.empty()) {
        out.values[Slot::robot] = out.robots.front();
        out.values[Slot::leader] = out.robots.back();
    }
    return out;
}

void DialogueContext::track(const TbsMessage& msg)
{
    busy[msg.robot_id] = true;
    if (msg.modifiers.stealth) {
        stealth_tasks.insert(msg.msg_id);
    }
}

std::optional<Wake> detect_wake(std::string_view text, const Roster& roster)
{
    const std::vector<std::string> tokens = normalize(text);
    std::size_t at = 0;
    if (tokens.size() > 1 && (tokens[0] == "hey" || tokens[0] == "ok" || tokens[0] == "okay")) {
        at = 1;
    }
    for (const RobotSpec& r : roster) {
        for (const std::string& name : {r.display_name, r.id}) {
            const std::vector<std::string> seq = normalize(name);
            if (starts_with(tokens, at, seq)) {
                return Wake{r.id, {tokens.begin() + static_cast<std::ptrdiff_t>(at + seq.size()), tokens.end()}};
            }
        }
    }
    static const std::regex vocative(R"(^\s*([A-Z][A-Za-z]+)\s*,)");
    std::cmatch m;
    const std::string s(text);
    if (std::regex_search(s.c_str(), m, vocative)) {
        const std::string word = m[1].str();
        if (!interjections.contains(fold_case(word))) {
            throw UnknownRobotName("I don't know a robot called " + word + ".");
        }
    }
    return std::nullopt;
}

Addressee resolve_addressee(const std::vector<std::string>& tokens, const TrainingPair& best, const Slots& slots,
                            const DialogueContext& context, const Roster& roster)
{
    const ActionKind action = best.tbs_template ? best.tbs_template->action : ActionKind::HALT;
    const std::optional<std::string> leader =
        action == ActionKind::FOLLOW && slots.has(Slot::leader) ? std::optional(slots.values.at(Slot::leader))
                                                                : std::nullopt;
    std::vector<std::string> capable;
    for (const RobotSpec& r : roster) {
        if (r.can(action) && r.id != leader) {
            capable.push_back(r.id);
        }
    }

    if (best.robot_binding == "broadcast" || mentions_broadcast(tokens)) {
        if (capable.empty()) {
            return NeedClarification{"No robot can do that."};
        }
        return capable;
    }
    if (best.robot_binding == "explicit-name" && !slots.robots.empty()) {
        return std::vector<std::string>{slots.robots.front()};
    }
    const bool implicit = context.mode == AddressingMode::implicit_addressee;
    if (const auto bound = best.implicit_robot(); bound && implicit) {
        return std::vector<std::string>{*bound};
    }
    if (context.attended_robot) {
        return std::vector<std::string>{*context.attended_robot};
    }
    if (implicit && capable.size() == 1) {
        return capable;
    }
    return NeedClarification{question_for(Slot::robot, {})};
}

DialogueManager::DialogueManager(Corpus corpus, std::shared_ptr<const WorldMap> map, Roster roster,
                                 std::unique_ptr<Scorer> scorer, double threshold)
    : corpus_(std::move(corpus)), map_(std::move(map)), roster_(std::move(roster)), scorer_(std::move(scorer)),
      threshold_(threshold)
{
    if (auto problem = check_corpus(corpus_, roster_)) {
        throw ConfigError(*problem);
    }
    if (!scorer_) {
        scorer_ = std::make_unique<TfIdfScorer>(corpus_);
    }
}

const TrainingPair* DialogueManager::pair(int id) const
{
    const auto it = std::find_if(corpus_.begin(), corpus_.end(), [&](const TrainingPair& p) { return p.id == id; });
    return it == corpus_.end() ? nullptr : &*it;
}

std::string DialogueManager::display_name(const std::string& robot_id) const
{
    const RobotSpec* r = find_robot(roster_, robot_id);
    return r ? r->display_name : robot_id;
}

DmOutput DialogueManager::interpret(const DialogueTurn& turn, DialogueContext& context) const
{
    context.transcript.push_back(turn);
    DmOutput out = [&] {
        const std::vector<std::string> tokens = normalize(turn.text);
        std::optional<Wake> wake;
        try {
            wake = detect_wake(turn.text, roster_);
        } catch (const UnknownRobotName& e) {
            DmOutput o;
            o.reply_to_operator = e.what();
            return o;
        }
        auto woken = [&]() -> std::optional<std::string> {
            return wake ? std::optional(wake->robot_id) : std::nullopt;
        };
        if (wake && !wake->remainder.empty()) {
            const std::vector<Ranked> rest = scorer_->rank(wake->remainder);
            if (!rest.empty() && rest.front().score >= threshold_ && pair(rest.front().pair_id)->tbs_template) {
                context.attended_robot = wake->robot_id;
                context.attended_since = turn.time;
                return interpret_tokens(wake->remainder, woken(), turn.time, context);
            }
        }
        const std::vector<Ranked> full = scorer_->rank(tokens);
        const bool wake_pair = !full.empty() && full.front().score >= threshold_ &&
                               pair(full.front().pair_id)->category == Category::wake;
        std::optional<std::string> robot = woken();
        if (wake_pair && !robot) {
            const Slots slots = extract_slots(tokens, *map_, roster_);
            if (!slots.robots.empty()) {
                robot = slots.robots.front();
            }
        }
        if (robot && (wake_pair || (wake && wake->remainder.empty()))) {
            context.attended_robot = *robot;
            context.attended_since = turn.time;
            if (context.pending && context.pending->missing.contains(Slot::robot)) {
                DmOutput o = fill_pending({}, Slots{}, robot, turn.time, context);
                return o;
            }
            DmOutput o;
            o.disposition = Disposition::wake_ack;
            o.reply_to_operator = display_name(*robot) + " here, listening.";
            if (wake_pair) {
                o.matched_pair = full.front().pair_id;
                o.score = full.front().score;
            }
            return o;
        }
        if (wake) {
            context.attended_robot = wake->robot_id;
            context.attended_since = turn.time;
            return interpret_tokens(wake->remainder, woken(), turn.time, context);
        }
        return interpret_tokens(tokens, std::nullopt, turn.time, context);
    }();
    context.transcript.push_back({"dm", out.reply_to_operator, turn.time, false});
    return out;
}

DmOutput DialogueManager::interpret_tokens(const std::vector<std::string>& tokens, std::optional<std::string> woken,
                                           double time, DialogueContext& context) const
{
    const Slots slots = extract_slots(tokens, *map_, roster_);
    const std::vector<Ranked> ranked = scorer_->rank(tokens);
    const Ranked top = ranked.empty() ? Ranked{} : ranked.front();
    const TrainingPair* best = ranked.empty() ? nullptr : pair(top.pair_id);
    const bool matched = best && top.score >= threshold_;

    std::string notice;
    if (context.pending) {
        const PendingFrame& pf = *context.pending;
        const TrainingPair& pp = *pair(pf.pair_id);
        bool fills = false;
        for (Slot s : pf.missing) {
            if (s == Slot::robot) {
                fills = fills || woken || !slots.robots.empty();
            } else if (s == Slot::leader) {
                fills = fills || !slots.robots.empty();
            } else {
                fills = fills || slots.has(s);
            }
        }
        const bool new_instruction = matched && best->tbs_template &&
                                     (best->tbs_template->action != pp.tbs_template->action || !fills);
        if (!new_instruction) {
            if (fills) {
                DmOutput o = fill_pending(tokens, slots, woken, time, context);
                o.score = top.score;
                return o;
            }
            DmOutput o;
            o.disposition = matched ? Disposition::clarification : Disposition::off_topic;
            o.matched_pair = matched ? std::optional(top.pair_id) : std::nullopt;
            o.score = top.score;
            o.reply_to_operator = "I still need to know: " +
                                  question_for(*pf.missing.begin(), pf.robots.empty() ? "it" : display_name(pf.robots.front()));
            return o;
        }
        context.pending.reset();
        notice = "Dropping the earlier request. ";
    }

    DmOutput o;
    o.score = top.score;
    if (!matched) {
        o.reply_to_operator = notice + off_topic_reply;
        return o;
    }
    o.matched_pair = top.pair_id;
    if (!best->tbs_template) {
        // A wake phrase after a vocative, or aimed at whoever is attended.
        // With nobody named or attended the match rests on filler words.
        const std::optional<std::string> who = woken ? woken : context.attended_robot;
        if (!who) {
            o.matched_pair.reset();
            o.reply_to_operator = notice + off_topic_reply;
            return o;
        }
        o.disposition = Disposition::wake_ack;
        o.reply_to_operator = notice + display_name(*who) + " here, listening.";
        return o;
    }

    std::vector<std::string> robots;
    if (woken) {
        robots.push_back(*woken);
    } else {
        const Addressee who = resolve_addressee(tokens, *best, slots, context, roster_);
        if (const auto* ids = std::get_if<std::vector<std::string>>(&who)) {
            robots = *ids;
        }
        if (mentions_broadcast(tokens) || best->robot_binding == "broadcast") {
            context.attended_robot.reset();
        }
    }

    std::map<Slot, std::string> filled;
    for (Slot s : best->required_slots) {
        if (s == Slot::robot) {
            continue;
        }
        if (s == Slot::leader) {
            // Last robot mentioned that is not one of the addressees.
            for (auto it = slots.robots.rbegin(); it != slots.robots.rend(); ++it) {
                if (std::find(robots.begin(), robots.end(), *it) == robots.end()) {
                    filled[s] = *it;
                    break;
                }
            }
            continue;
        }
        if (slots.has(s)) {
            filled[s] = slots.values.at(s);
        }
    }
    DmOutput done = complete(*best, std::move(filled), std::move(robots), slots.urgency, slots.stealth, top.score,
                             time, context);
    done.reply_to_operator = notice + done.reply_to_operator;
    return done;
}

DmOutput DialogueManager::fill_pending(const std::vector<std::string>& tokens, const Slots& slots,
                                       std::optional<std::string> woken, double time, DialogueContext& context) const
{
    (void)tokens;
    PendingFrame pf = *context.pending;
    context.pending.reset();
    if (pf.missing.contains(Slot::robot)) {
        if (woken) {
            pf.robots = {*woken};
        } else if (!slots.robots.empty()) {
            pf.robots = {slots.robots.front()};
        }
    }
    for (Slot s : pf.missing) {
        if (s == Slot::leader) {
            for (auto it = slots.robots.rbegin(); it != slots.robots.rend(); ++it) {
                if (std::find(pf.robots.begin(), pf.robots.end(), *it) == pf.robots.end()) {
                    pf.filled[s] = *it;
                    break;
                }
            }
        } else if (s != Slot::robot && slots.has(s)) {
            pf.filled[s] = slots.values.at(s);
        }
    }
    if (slots.urgency == Urgency::urgent) {
        pf.urgency = Urgency::urgent;
    }
    pf.stealth = pf.stealth || slots.stealth;
    return complete(*pair(pf.pair_id), std::move(pf.filled), std::move(pf.robots), pf.urgency, pf.stealth, 0.0, time,
                    context);
}

DmOutput DialogueManager::complete(const TrainingPair& pair, std::map<Slot, std::string> filled,
                                   std::vector<std::string> robots, Urgency urgency, bool stealth, double score,
                                   double time, DialogueContext& context) const
{
    DmOutput o;
    o.matched_pair = pair.id;
    o.score = score;

    std::set<Slot> missing;
    for (Slot s : pair.required_slots) {
        if (s == Slot::robot ? robots.empty() : !filled.contains(s)) {
            missing.insert(s);
        }
    }
    if (robots.empty()) {
        missing.insert(Slot::robot);
    }
    std::string who;
    for (const std::string& r : robots) {
        who += (who.empty() ? "" : " and ") + display_name(r);
    }
    if (!missing.empty()) {
        // Ask for the robot first so later questions can name it.
        const Slot ask = missing.contains(Slot::robot) ? Slot::robot : *missing.begin();
        context.pending = PendingFrame{pair.id, filled, missing, robots, urgency, stealth, time};
        o.disposition = Disposition::clarification;
        o.reply_to_operator = question_for(ask, who);
        return o;
    }

    const TbsTemplate& t = *pair.tbs_template;
    std::vector<TbsMessage> ready;
    std::string problem;
    for (const std::string& robot : robots) {
        TbsMessage msg;
        msg.msg_id = "dm-" + std::to_string(context.next_msg);
        msg.issued_at = time;
        msg.robot_id = robot;
        msg.action = t.action;
        if (t.loc) {
            msg.location = LocationRef::named(slot_location_kind(*t.loc), filled.at(*t.loc));
        }
        if (t.action == ActionKind::FOLLOW) {
            msg.leader_id = filled.at(Slot::leader);
        }
        msg.object_info = t.obj;
        msg.modifiers = {urgency, stealth};
        if (auto v = validate(msg, *map_, roster_)) {
            if (problem.empty()) {
                problem = v->message;
            }
            continue;
        }
        ++context.next_msg;
        ready.push_back(std::move(msg));
    }
    if (ready.empty()) {
        o.disposition = Disposition::clarification;
        o.reply_to_operator = "I can't do that: " + problem + ".";
        return o;
    }

    who.clear();
    for (const TbsMessage& m : ready) {
        who += (who.empty() ? "" : " and ") + display_name(m.robot_id);
        context.track(m);
    }
    std::string reply = pair.response_template;
    auto fill_hole = [&](const std::string& hole, const std::string& value) {
        for (std::size_t at = reply.find(hole); at != std::string::npos; at = reply.find(hole, at + value.size())) {
            reply.replace(at, hole.size(), value);
        }
    };
    fill_hole("{robot}", who);
    for (const auto& [slot, value] : filled) {
        fill_hole("{" + std::string(to_string(slot)) + "}",
                  slot == Slot::leader ? display_name(value) : spoken(value));
    }
    o.reply_to_operator = reply;
    o.tbs = std::move(ready);
    o.disposition = Disposition::executed;
    return o;
}

std::optional<DialogueTurn> DialogueManager::on_status(const TbsStatus& status, DialogueContext& context) const
{
    if (is_terminal(status.phase)) {
        context.busy[status.robot_id] = false;
    }
    std::string detail = status.detail;
    const std::string found = describe_detections(status.detections);
    if (!found.empty() && detail.find(status.detections.front().object_id) == std::string::npos) {
        detail += (detail.empty() ? "" : "; ") + found;
    }
    std::string text;
    switch (status.phase) {
    case Phase::accepted:
    case Phase::started: return std::nullopt;
    case Phase::progress:
        if (detail.empty()) {
            return std::nullopt;
        }
        text = detail;
        break;
    case Phase::completed: text = detail.empty() ? "done" : detail; break;
    case Phase::failed: text = "could not finish the task (" + (detail.empty() ? "failed" : detail) + ")"; break;
    case Phase::interrupted: text = "task interrupted"; break;
    }
    DialogueTurn turn{"robot:" + status.robot_id, display_name(status.robot_id) + ": " + text, status.time,
                      context.stealth_tasks.contains(status.ref_msg_id)};
    if (is_terminal(status.phase)) {
        context.stealth_tasks.erase(status.ref_msg_id);
    }
    context.transcript.push_back(turn);
    return turn;
}

namespace {

struct PairSpec {
    std::string utterance;
    Category category;
    std::string binding;
    std::string response;
    std::optional<TbsTemplate> tbs;
    std::set<Slot> slots;
};

} // namespace

Corpus generate_corpus(const WorldMap& map, const Roster& roster)
{
    std::vector<PairSpec> specs;
    auto add = [&](std::string u, Category c, std::string binding, std::string response, std::optional<TbsTemplate> t,
                   std::set<Slot> slots) {
        specs.push_back({std::move(u), c, std::move(binding), std::move(response), std::move(t), std::move(slots)});
    };
    auto words = [](const std::string& name) { return join_tokens(normalize(name)); };

    std::optional<std::string> aerial;
    std::optional<std::string> ground;
    for (const RobotSpec& r : roster) {
        if (r.kind == RobotKind::aerial && !aerial) {
            aerial = r.id;
        }
        if (r.kind == RobotKind::ground && !ground) {
            ground = r.id;
        }
    }
    const std::string fly_binding = aerial ? "implicit:" + *aerial : "addressee-context";
    const std::string drive_binding = ground ? "implicit:" + *ground : "addressee-context";

    const std::vector<std::string> wake_forms{"{r}",
                                              "hey {r}",
                                              "{r} are you there",
                                              "{r} come in",
                                              "{r} listen up",
                                              "attention {r}",
                                              "{r} do you copy",
                                              "{r} wake up",
                                              "{r} respond",
                                              "{r} stand by for orders",
                                              "{r} i need you",
                                              "talk to me {r}",
                                              "{r} are you ready",
                                              "{r} can you hear me",
                                              "{r} report in",
                                              "calling {r}"};
    auto put = [](std::string form, const std::string& hole, const std::string& value) {
        for (std::size_t at = form.find(hole); at != std::string::npos; at = form.find(hole)) {
            form.replace(at, hole.size(), value);
        }
        return form;
    };
    for (const RobotSpec& r : roster) {
        for (const std::string& f : wake_forms) {
            add(put(f, "{r}", words(r.display_name)), Category::wake, "explicit-name", "{robot} here, listening.",
                std::nullopt, {Slot::robot});
        }
    }

    const TbsTemplate go{ActionKind::GOTO, Slot::destination, std::nullopt};
    add("go to", Category::navigate, "addressee-context", "{robot} is heading to the {destination}.", go,
        {Slot::destination});
    add("move", Category::navigate, "addressee-context", "{robot} is heading to the {destination}.", go,
        {Slot::destination});
    for (const Waypoint& w : map.waypoints()) {
        const std::string n = words(w.name);
        for (const char* f : {"go to the {w}", "head to the {w}", "move to {w}", "drive over to the {w}",
                              "hurry to the {w}"}) {
            add(put(f, "{w}", n), Category::navigate, "addressee-context", "{robot} is heading to the {destination}.",
                go, {Slot::destination});
        }
        for (const RobotSpec& r : roster) {
            add("send " + words(r.display_name) + " to the " + n, Category::navigate, "explicit-name",
                "{robot} is heading to the {destination}.", go, {Slot::robot, Slot::destination});
        }
        add("everyone go to the " + n, Category::navigate, "broadcast", "{robot} are heading to the {destination}.",
            go, {Slot::destination});
    }
    const TbsTemplate takeoff{ActionKind::TAKEOFF, std::nullopt, std::nullopt};
    const TbsTemplate land{ActionKind::LAND, std::nullopt, std::nullopt};
    const TbsTemplate halt{ActionKind::HALT, std::nullopt, std::nullopt};
    for (const char* u : {"take off", "lift off", "get airborne"}) {
        add(u, Category::navigate, fly_binding, "{robot} is taking off.", takeoff, {});
    }
    for (const char* u : {"land", "touch down", "land the drone", "set down somewhere"}) {
        add(u, Category::navigate, fly_binding, "{robot} is landing.", land, {});
    }
    for (const char* u : {"stop", "halt", "stop what you are doing", "hold position", "freeze"}) {
        add(u, Category::navigate, "addressee-context", "{robot} is stopping.", halt, {});
    }
    add("everyone stop", Category::navigate, "broadcast", "{robot} are stopping.", halt, {});

    const TbsTemplate follow{ActionKind::FOLLOW, std::nullopt, std::nullopt};
    add("follow", Category::follow, "addressee-context", "{robot} will follow {leader}.", follow, {Slot::leader});
    const std::vector<std::string> follow_forms{"follow {r}",        "follow behind {r}",  "stay behind {r}",
                                                "tail {r}",          "go after {r}",       "keep up with {r}",
                                                "trail {r}",         "shadow {r}",         "stick with {r}",
                                                "come along with {r}", "follow {r} closely", "stay on {r}",
                                                "keep following {r}", "track {r}",         "follow after {r}"};
    for (const RobotSpec& r : roster) {
        const std::string n = words(r.display_name);
        for (const std::string& f : follow_forms) {
            add(put(f, "{r}", n), Category::follow, "addressee-context", "{robot} will follow {leader}.", follow,
                {Slot::leader});
        }
        for (const RobotSpec& other : roster) {
            if (other.id == r.id) {
                continue;
            }
            const std::string o = words(other.display_name);
            add("have " + n + " follow " + o, Category::follow, "explicit-name", "{robot} will follow {leader}.",
                follow, {Slot::robot, Slot::leader});
            add("tell " + n + " to follow " + o, Category::follow, "explicit-name", "{robot} will follow {leader}.",
                follow, {Slot::robot, Slot::leader});
        }
    }

    const TbsTemplate scout{ActionKind::SCOUT, Slot::route, ObjectClass::injured_person};
    const TbsTemplate search{ActionKind::SEARCH, Slot::area, ObjectClass::injured_person};
    add("scout route", Category::inspect, fly_binding, "{robot} is scouting route {route}.", scout, {Slot::route});
    add("search", Category::inspect, "addressee-context", "{robot} is searching the {area}.", search, {Slot::area});
    for (const Route& r : map.routes()) {
        const std::string n = words(r.name);
        for (const char* f : {"scout route {x}", "fly route {x}", "survey route {x}", "fly along route {x} and look around"}) {
            add(put(f, "{x}", n), Category::inspect, fly_binding, "{robot} is scouting route {route}.", scout,
                {Slot::route});
        }
        add(put("check route {x} for injured people", "{x}", n), Category::inspect, "addressee-context",
            "{robot} is scouting route {route}.", scout, {Slot::route});
        add(put("drive route {x} and look for survivors", "{x}", n), Category::inspect, drive_binding,
            "{robot} is scouting route {route}.", scout, {Slot::route});
    }
    for (const NamedPolygon& a : map.areas()) {
        const std::string n = words(a.name);
        for (const char* f : {"search the {x}", "search {x} for injured people", "look for survivors in the {x}",
                              "sweep the {x}", "comb through the {x}"}) {
            add(put(f, "{x}", n), Category::inspect, "addressee-context", "{robot} is searching the {area}.", search,
                {Slot::area});
        }
        add(put("fly over the {x} and search it", "{x}", n), Category::inspect, fly_binding,
            "{robot} is searching the {area}.", search, {Slot::area});
    }

    const TbsTemplate patrol{ActionKind::PATROL, Slot::area, ObjectClass::injured_person};
    add("patrol", Category::patrol, "addressee-context", "{robot} is patrolling the {area}.", patrol, {Slot::area});
    for (const NamedPolygon& a : map.areas()) {
        const std::string n = words(a.name);
        for (const char* f : {"patrol the {x}", "patrol {x}", "guard the {x}", "keep watch over the {x}",
                              "circle the {x}", "walk the perimeter of the {x}", "patrol around the {x}",
                              "keep an eye on the {x}", "watch the {x}"}) {
            add(put(f, "{x}", n), Category::patrol, "addressee-context", "{robot} is patrolling the {area}.", patrol,
                {Slot::area});
        }
        add(put("fly patrols over the {x}", "{x}", n), Category::patrol, fly_binding,
            "{robot} is patrolling the {area}.", patrol, {Slot::area});
        add(put("drive patrols around the {x}", "{x}", n), Category::patrol, drive_binding,
            "{robot} is patrolling the {area}.", patrol, {Slot::area});
    }

    // Keep only pairs whose token bag is new, so each one retrieves itself.
    Corpus corpus;
    std::set<std::multiset<std::string>> bags;
    for (PairSpec& s : specs) {
        const std::vector<std::string> toks = normalize(s.utterance);
        if (!bags.insert({toks.begin(), toks.end()}).second) {
            continue;
        }
        corpus.push_back({static_cast<int>(corpus.size()) + 1, std::move(s.utterance), s.category, std::move(s.binding),
                          std::move(s.response), s.tbs, std::move(s.slots)});
    }
    return corpus;
}

} // namespace multibot
