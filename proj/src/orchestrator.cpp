#include "multibot/orchestrator.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "multibot/errors.hpp"

namespace multibot {

namespace {

double wall_now()
{
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string read_text(const std::string& path, const char* what)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(std::string("cannot read ") + what + " " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ojson robot_json(const RobotState& r, const DialogueContext& ctx)
{
    ojson j;
    j["id"] = r.id;
    j["display_name"] = r.display_name;
    j["kind"] = std::string(to_string(r.kind));
    j["x"] = r.position.x;
    j["y"] = r.position.y;
    j["heading"] = r.heading;
    j["altitude"] = r.altitude;
    j["airborne"] = r.airborne;
    const auto busy = ctx.busy.find(r.id);
    j["busy"] = busy != ctx.busy.end() && busy->second;
    if (r.active_task) {
        j["task"] = r.active_task->msg.msg_id;
        j["action"] = std::string(to_string(r.active_task->msg.action));
    } else {
        j["task"] = nullptr;
        j["action"] = nullptr;
    }
    return j;
}

ojson frame(const char* type, ojson payload)
{
    ojson f;
    f["type"] = type;
    f["payload"] = std::move(payload);
    return f;
}

} // namespace

std::string_view to_string(DmMode m)
{
    return m == DmMode::wizard ? "wizard" : "auto";
}

std::optional<DmMode> parse_dm_mode(std::string_view s)
{
    if (s == "auto") {
        return DmMode::automatic;
    }
    if (s == "wizard" || s == "wizard-replay") {
        return DmMode::wizard;
    }
    return std::nullopt;
}

std::string_view to_string(LogKind k)
{
    switch (k) {
    case LogKind::turn: return "turn";
    case LogKind::tbs: return "tbs";
    case LogKind::status: return "status";
    case LogKind::event: return "event";
    case LogKind::config: return "config";
    }
    return "event";
}

std::optional<LogKind> parse_log_kind(std::string_view s)
{
    for (auto k : {LogKind::turn, LogKind::tbs, LogKind::status, LogKind::event, LogKind::config}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

std::string encode_record(const LogRecord& r)
{
    ojson j;
    j["wall_time"] = r.wall_time;
    j["sim_time"] = r.sim_time;
    j["kind"] = std::string(to_string(r.kind));
    j["payload"] = r.payload;
    return j.dump();
}

LogRecord decode_record(std::string_view line)
{
    ojson j;
    try {
        j = ojson::parse(line.begin(), line.end());
    } catch (const ojson::parse_error& e) {
        throw MalformedLog(std::string("log line is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("sim_time") || !j["sim_time"].is_number() || !j.contains("kind") ||
        !j["kind"].is_string() || !j.contains("payload")) {
        throw MalformedLog("log record needs sim_time, kind and payload");
    }
    const auto kind = parse_log_kind(j["kind"].get<std::string>());
    if (!kind) {
        throw MalformedLog("unknown log record kind " + j["kind"].get<std::string>());
    }
    LogRecord r;
    r.wall_time = j.contains("wall_time") && j["wall_time"].is_number() ? j["wall_time"].get<double>() : 0.0;
    r.sim_time = j["sim_time"].get<double>();
    r.kind = *kind;
    r.payload = j["payload"];
    return r;
}

std::string dump_log(const std::vector<LogRecord>& log)
{
    std::string out;
    for (const LogRecord& r : log) {
        out += encode_record(r) + "\n";
    }
    return out;
}

std::vector<LogRecord> parse_log(std::string_view text)
{
    std::vector<LogRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            out.push_back(decode_record(line));
        }
    }
    return out;
}

std::vector<LogRecord> read_log_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw MalformedLog("cannot read log " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_log(ss.str());
}

void write_log_file(const std::string& path, const std::vector<LogRecord>& log)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write log " + path);
    }
    out << dump_log(log);
}

ojson turn_json(const DialogueTurn& t)
{
    ojson j;
    j["speaker"] = t.speaker;
    j["text"] = t.text;
    j["time"] = t.time;
    j["chat_only"] = t.chat_only;
    return j;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::shared_ptr<const WorldMap> map, SimConfig sim, Corpus corpus, const SessionConfig& config)
    : map_(map), sim_(make_sim(map, sim)), dm_(std::move(corpus), map, make_roster(sim), nullptr, config.threshold),
      dm_mode_(config.dm_mode)
{
    context_.mode = config.addressing;
    for (const RobotState& r : sim_.robots) {
        context_.busy[r.id] = false;
    }
    ojson cfg;
    cfg["version"] = log_version;
    cfg["seed"] = sim_.config.seed;
    cfg["dm_mode"] = std::string(to_string(config.dm_mode));
    cfg["addressing"] = std::string(to_string(config.addressing));
    cfg["threshold"] = config.threshold;
    cfg["corpus"] = {{"path", config.corpus_path}, {"pairs", dm_.corpus().size()}};
    cfg["map"] = ojson::parse(dump_map(*map_));
    cfg["scenario"] = ojson::parse(dump_scenario(sim_.config));
    record(LogKind::config, std::move(cfg));
}

Session Session::from_files(const SessionConfig& config)
{
    auto map = std::make_shared<const WorldMap>(load_map(read_text(config.map_path, "map")));
    SimConfig sim = load_scenario_file(config.scenario_path);
    if (config.seed) {
        sim.seed = *config.seed;
    }
    Corpus corpus = load_corpus_file(config.corpus_path);
    return Session(std::move(map), std::move(sim), std::move(corpus), config);
}

void Session::record(LogKind kind, ojson payload)
{
    log_.push_back({wall_now(), sim_.clock, kind, std::move(payload)});
}

void Session::publish(const char* type, ojson payload)
{
    if (sink_) {
        sink_(frame(type, std::move(payload)));
    }
}

void Session::record_turn(const DialogueTurn& turn, std::optional<Disposition> disposition)
{
    ojson j = turn_json(turn);
    if (turn.speaker == "operator") {
        j["disposition"] = disposition ? ojson(std::string(to_string(*disposition))) : ojson(nullptr);
    }
    record(LogKind::turn, j);
    publish("chat", turn_json(turn));
}

DmOutput Session::say(const std::string& text)
{
    const DialogueTurn turn{"operator", text, sim_.clock, false};
    if (dm_mode_ == DmMode::wizard) {
        context_.transcript.push_back(turn);
        record_turn(turn);
        publish("wizard_inbox", turn_json(turn));
        return {};
    }
    DmOutput out = dm_.interpret(turn, context_);
    record_turn(turn, out.disposition);
    record_turn(context_.transcript.back());
    for (const TbsMessage& msg : out.tbs) {
        execute(msg);
    }
    return out;
}

std::optional<std::string> Session::wizard_submit(const std::string& reply, const std::optional<TbsMessage>& tbs)
{
    if (dm_mode_ != DmMode::wizard) {
        throw NotInWizardMode("wizard replies need wizard mode");
    }
    if (tbs) {
        if (auto v = validate(*tbs, *map_, dm_.roster())) {
            return v->field + ": " + v->message;
        }
        if (used_ids_.contains(tbs->msg_id)) {
            return "id: message id " + tbs->msg_id + " already used";
        }
    }
    if (!reply.empty()) {
        const DialogueTurn turn{"dm", reply, sim_.clock, false};
        context_.transcript.push_back(turn);
        record_turn(turn);
    }
    if (tbs) {
        // issue time is when the message enters the session, as for the automatic DM
        TbsMessage stamped = *tbs;
        stamped.issued_at = sim_.clock;
        return execute(stamped);
    }
    return std::nullopt;
}

void Session::set_dm_mode(DmMode mode)
{
    if (mode == DmMode::wizard && !wizard_connected_) {
        throw NoWizardConnected("no wizard client is connected");
    }
    dm_mode_ = mode;
}

std::optional<std::string> Session::execute(const TbsMessage& msg)
{
    if (auto v = validate(msg, *map_, dm_.roster())) {
        return v->field + ": " + v->message;
    }
    if (!used_ids_.insert(msg.msg_id).second) {
        return "id: message id " + msg.msg_id + " already used";
    }
    record(LogKind::tbs, ojson::parse(encode(msg)));
    context_.track(msg);
    std::vector<SimEvent> events;
    try {
        events = dispatch(sim_, msg);
    } catch (const Error& e) {
        context_.busy[msg.robot_id] = false;
        return std::string("action: ") + e.what();
    }
    handle_events(events);
    return std::nullopt;
}

void Session::handle_events(const std::vector<SimEvent>& events)
{
    for (const SimEvent& e : events) {
        if (e.kind == EventKind::status_emitted && e.status) {
            record(LogKind::status, ojson::parse(encode_status(*e.status)));
            if (auto turn = dm_.on_status(*e.status, context_)) {
                record_turn(*turn);
            }
        } else {
            record(LogKind::event, ojson::parse(encode_event(e)));
        }
    }
}

void Session::advance()
{
    handle_events(step(sim_, sim_.config.tick));
}

bool Session::idle() const
{
    for (const RobotState& r : sim_.robots) {
        if (r.active_task) {
            return false;
        }
    }
    return true;
}

ojson Session::state_frame() const
{
    ojson p;
    p["t"] = sim_.clock;
    p["robots"] = ojson::array();
    for (const RobotState& r : sim_.robots) {
        p["robots"].push_back(robot_json(r, context_));
    }
    p["discovered"] = sim_.discovered;
    p["dm_mode"] = std::string(to_string(dm_mode_));
    p["addressing"] = std::string(to_string(context_.mode));
    return frame("state", std::move(p));
}

ojson Session::hello_frame() const
{
    ojson p;
    p["event"] = "hello";
    p["map"] = ojson::parse(dump_map(*map_));
    p["robots"] = ojson::array();
    for (const RobotSpec& r : dm_.roster()) {
        p["robots"].push_back({{"id", r.id}, {"display_name", r.display_name}, {"kind", std::string(to_string(r.kind))}});
    }
    p["dm_mode"] = std::string(to_string(dm_mode_));
    p["addressing"] = std::string(to_string(context_.mode));
    p["transcript"] = ojson::array();
    for (const DialogueTurn& t : context_.transcript) {
        p["transcript"].push_back(turn_json(t));
    }
    std::set<std::string> replies;
    for (const TrainingPair& pair : dm_.corpus()) {
        replies.insert(pair.response_template);
    }
    p["quick_replies"] = replies;
    return frame("control", std::move(p));
}

// ---------------------------------------------------------------------------
// Scripts and headless runs

std::vector<ScriptItem> parse_script(std::string_view text)
{
    std::vector<ScriptItem> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t n = 0;
    double last = 0.0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto bad = [&](const std::string& what) { return ConfigError("script line " + std::to_string(n) + ": " + what); };
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error& e) {
            throw bad(e.what());
        }
        if (!j.is_object() || !j.contains("t") || !j["t"].is_number()) {
            throw bad("needs a numeric t");
        }
        ScriptItem item;
        item.t = j["t"].get<double>();
        if (item.t < last) {
            throw bad("times must be non-decreasing");
        }
        last = item.t;
        for (const auto& [k, v] : j.items()) {
            if (k != "t" && k != "say" && k != "wizard") {
                throw bad("unknown key " + k);
            }
        }
        if (j.contains("say") == j.contains("wizard")) {
            throw bad("exactly one of say or wizard");
        }
        if (j.contains("say")) {
            item.say = j["say"].get<std::string>();
        } else {
            const ojson& w = j["wizard"];
            item.wizard_reply = w.value("reply", std::string());
            if (w.contains("tbs") && !w["tbs"].is_null()) {
                try {
                    item.wizard_tbs = decode(w["tbs"].dump());
                } catch (const DecodeError& e) {
                    throw bad(std::string("wizard tbs: ") + e.what());
                }
            }
        }
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<ScriptItem> load_script_file(const std::string& path)
{
    return parse_script(read_text(path, "script"));
}

HeadlessResult run_headless(Session& session, const std::vector<ScriptItem>& script)
{
    const bool wizard = session.dm_mode() == DmMode::wizard;
    const double timeout = session.sim().config.timeout;
    bool timed_out = false;
    std::size_t next = 0;
    while (true) {
        while (next < script.size() && script[next].t <= session.clock() + 1e-9) {
            const ScriptItem& item = script[next++];
            if (item.say) {
                session.say(*item.say);
            } else {
                if (!wizard) {
                    throw ConfigError("wizard script items need the wizard dm mode");
                }
                if (auto problem = session.wizard_submit(item.wizard_reply.value_or(""), item.wizard_tbs)) {
                    throw ConfigError("wizard tbs rejected: " + *problem);
                }
            }
        }
        if (next == script.size() && session.idle()) {
            break;
        }
        if (session.clock() >= timeout - 1e-9) {
            timed_out = true;
            break;
        }
        session.advance();
    }
    HeadlessResult result{session.log(), compute_metrics(session.log())};
    result.metrics.timed_out = timed_out;
    return result;
}

HeadlessResult run_headless(const SessionConfig& config, const std::vector<ScriptItem>& script)
{
    SessionConfig cfg = config;
    Session session = Session::from_files(cfg);
    if (cfg.dm_mode == DmMode::wizard) {
        session.set_wizard_connected(true); // the script plays the wizard
    }
    return run_headless(session, script);
}

// ---------------------------------------------------------------------------
// Metrics and replay

namespace {

const ojson& config_of(const std::vector<LogRecord>& log)
{
    if (log.empty() || log.front().kind != LogKind::config) {
        throw MalformedLog("log does not start with a config record");
    }
    const ojson& cfg = log.front().payload;
    if (!cfg.is_object() || !cfg.contains("version")) {
        throw MalformedLog("config record has no version");
    }
    if (cfg["version"] != log_version) {
        throw VersionMismatch("log version " + cfg["version"].dump() + " is not " + std::to_string(log_version));
    }
    return cfg;
}

} // namespace

ojson metrics_json(const Metrics& m)
{
    ojson j;
    j["operator_turns"] = m.operator_turns;
    j["matched_turns"] = m.matched_turns;
    j["coverage"] = m.coverage;
    j["coverage_undefined"] = m.coverage_undefined;
    j["clarifications"] = m.clarifications;
    j["completed"] = m.completed;
    j["failed"] = m.failed;
    j["interrupted"] = m.interrupted;
    j["unfinished"] = m.unfinished;
    j["timed_out"] = m.timed_out;
    j["tasks"] = ojson::array();
    for (const TaskMetrics& t : m.tasks) {
        ojson tj;
        tj["id"] = t.msg_id;
        tj["robot"] = t.robot_id;
        tj["action"] = std::string(to_string(t.action));
        tj["issued_at"] = t.issued_at;
        tj["outcome"] = t.outcome ? ojson(std::string(to_string(*t.outcome))) : ojson(nullptr);
        tj["completion_time"] = t.completion_time ? ojson(*t.completion_time) : ojson(nullptr);
        tj["distance_to_goal"] = t.distance_to_goal ? ojson(*t.distance_to_goal) : ojson(nullptr);
        j["tasks"].push_back(std::move(tj));
    }
    return j;
}

Metrics compute_metrics(const std::vector<LogRecord>& log)
{
    const ojson& cfg = config_of(log);
    std::optional<WorldMap> map;
    try {
        map = load_map(cfg.at("map").dump());
    } catch (const std::exception& e) {
        throw MalformedLog(std::string("config record map: ") + e.what());
    }

    Metrics m;
    std::map<std::string, std::size_t> task_index;
    std::map<std::string, std::optional<Vec2>> goals;
    try {
        for (std::size_t i = 1; i < log.size(); ++i) {
            const LogRecord& r = log[i];
            switch (r.kind) {
            case LogKind::config: throw MalformedLog("second config record");
            case LogKind::turn:
                if (r.payload.at("speaker") == "operator") {
                    ++m.operator_turns;
                    const ojson& d = r.payload.at("disposition");
                    if (d != "off_topic") {
                        ++m.matched_turns;
                    }
                    if (d == "clarification") {
                        ++m.clarifications;
                    }
                }
                break;
            case LogKind::tbs: {
                const TbsMessage msg = decode(r.payload.dump());
                TaskMetrics t;
                t.msg_id = msg.msg_id;
                t.robot_id = msg.robot_id;
                t.action = msg.action;
                t.issued_at = msg.issued_at;
                std::optional<Vec2> goal;
                if (msg.location && msg.action == ActionKind::GOTO) {
                    goal = location_point(*msg.location, *map);
                } else if (msg.location && msg.action == ActionKind::SCOUT) {
                    const Route* route = map->find_route(msg.location->name);
                    goal = map->find_waypoint(route->waypoints.back())->position;
                }
                goals[msg.msg_id] = goal;
                task_index[msg.msg_id] = m.tasks.size();
                m.tasks.push_back(std::move(t));
                break;
            }
            case LogKind::status: {
                const TbsStatus st = decode_status(r.payload.dump());
                if (!is_terminal(st.phase)) {
                    break;
                }
                const auto it = task_index.find(st.ref_msg_id);
                if (it == task_index.end()) {
                    throw MalformedLog("status for unknown task " + st.ref_msg_id);
                }
                TaskMetrics& t = m.tasks[it->second];
                t.outcome = st.phase == Phase::completed ? Outcome::succeeded
                            : st.phase == Phase::failed  ? Outcome::failed
                                                         : Outcome::interrupted;
                t.completion_time = st.time - t.issued_at;
                if (const auto& goal = goals[st.ref_msg_id]) {
                    t.distance_to_goal = distance(st.pose.position, *goal);
                }
                break;
            }
            case LogKind::event: break;
            }
        }
    } catch (const MalformedLog&) {
        throw;
    } catch (const std::exception& e) {
        throw MalformedLog(std::string("bad log record: ") + e.what());
    }
    for (const TaskMetrics& t : m.tasks) {
        if (!t.outcome) {
            ++m.unfinished;
        } else if (*t.outcome == Outcome::succeeded) {
            ++m.completed;
        } else if (*t.outcome == Outcome::failed) {
            ++m.failed;
        } else {
            ++m.interrupted;
        }
    }
    if (m.operator_turns == 0) {
        m.coverage = 1.0;
        m.coverage_undefined = true;
    } else {
        m.coverage = static_cast<double>(m.matched_turns) / static_cast<double>(m.operator_turns);
    }
    return m;
}

std::vector<ojson> replay(const std::vector<LogRecord>& log)
{
    const ojson& cfg = config_of(log);
    std::vector<ojson> frames;

    ojson hello;
    hello["event"] = "hello";
    hello["map"] = cfg.at("map");
    hello["robots"] = ojson::array();
    ojson robots = ojson::array();
    for (const ojson& r : cfg.at("scenario").at("robots")) {
        hello["robots"].push_back({{"id", r.at("id")}, {"display_name", r.at("display_name")}, {"kind", r.at("kind")}});
        robots.push_back({{"id", r.at("id")},
                          {"display_name", r.at("display_name")},
                          {"kind", r.at("kind")},
                          {"x", r.at("x")},
                          {"y", r.at("y")},
                          {"heading", r.value("heading", 0.0)},
                          {"altitude", 0.0},
                          {"airborne", false},
                          {"busy", false},
                          {"task", nullptr},
                          {"action", nullptr}});
    }
    hello["dm_mode"] = cfg.at("dm_mode");
    hello["addressing"] = cfg.at("addressing");
    hello["transcript"] = ojson::array();
    hello["replay"] = true;
    frames.push_back(frame("control", std::move(hello)));

    std::set<std::string> discovered;
    std::map<std::string, std::string> task_action;
    auto state = [&](double t) {
        ojson p;
        p["t"] = t;
        p["robots"] = robots;
        p["discovered"] = discovered;
        p["dm_mode"] = cfg.at("dm_mode");
        p["addressing"] = cfg.at("addressing");
        frames.push_back(frame("state", std::move(p)));
    };
    auto move_robot = [&](const std::string& id, const ojson& pose) {
        for (ojson& r : robots) {
            if (r["id"] == id) {
                r["x"] = pose.at("x");
                r["y"] = pose.at("y");
                r["altitude"] = pose.at("alt");
                r["airborne"] = pose.at("alt").get<double>() > 0.0;
                return &r;
            }
        }
        return static_cast<ojson*>(nullptr);
    };

    for (std::size_t i = 1; i < log.size(); ++i) {
        const LogRecord& r = log[i];
        switch (r.kind) {
        case LogKind::turn: {
            ojson t = r.payload;
            t.erase("disposition");
            frames.push_back(frame("chat", std::move(t)));
            break;
        }
        case LogKind::tbs:
            task_action[r.payload.at("id").get<std::string>()] = r.payload.at("action").get<std::string>();
            break;
        case LogKind::status: {
            const std::string phase = r.payload.at("phase").get<std::string>();
            if (ojson* robot = move_robot(r.payload.at("robot").get<std::string>(), r.payload.at("pose"))) {
                const std::string ref = r.payload.at("ref").get<std::string>();
                const bool over = phase == "completed" || phase == "failed" || phase == "interrupted";
                (*robot)["busy"] = !over;
                (*robot)["task"] = over ? ojson(nullptr) : ojson(ref);
                (*robot)["action"] = over ? ojson(nullptr) : ojson(task_action[ref]);
            }
            for (const ojson& d : r.payload.at("detections")) {
                discovered.insert(d.at("id").get<std::string>());
            }
            state(r.sim_time);
            break;
        }
        case LogKind::event:
            move_robot(r.payload.at("robot").get<std::string>(), r.payload.at("pose"));
            if (r.payload.contains("object")) {
                discovered.insert(r.payload["object"].get<std::string>());
            }
            state(r.sim_time);
            break;
        case LogKind::config: throw MalformedLog("second config record");
        }
    }
    return frames;
}

} // namespace multibot
