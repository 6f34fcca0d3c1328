#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "multibot/behavior.hpp"
#include "multibot/dialogue.hpp"
#include "multibot/sim.hpp"
#include "multibot/tbs.hpp"

namespace multibot {

using ojson = nlohmann::ordered_json;

inline constexpr int log_version = 1;

enum class DmMode { automatic, wizard };

std::string_view to_string(DmMode m);
std::optional<DmMode> parse_dm_mode(std::string_view s);

struct SessionConfig {
    std::string map_path;
    std::string corpus_path;
    std::string scenario_path;
    std::optional<std::uint64_t> seed; // overrides the scenario seed
    DmMode dm_mode = DmMode::automatic;
    AddressingMode addressing = AddressingMode::explicit_addressee;
    double threshold = default_threshold;
    unsigned short port = 8080;
};

enum class LogKind { turn, tbs, status, event, config };

std::string_view to_string(LogKind k);
std::optional<LogKind> parse_log_kind(std::string_view s);

struct LogRecord {
    double wall_time = 0.0;
    double sim_time = 0.0;
    LogKind kind = LogKind::event;
    ojson payload;
};

std::string encode_record(const LogRecord& r);
LogRecord decode_record(std::string_view line); // throws MalformedLog

std::string dump_log(const std::vector<LogRecord>& log);
std::vector<LogRecord> parse_log(std::string_view text);
std::vector<LogRecord> read_log_file(const std::string& path);
void write_log_file(const std::string& path, const std::vector<LogRecord>& log);

/// One live session: engine, dialogue context and log. Not thread-safe; the
/// owner serializes calls (the server drains its queue between ticks).
class Session {
public:
    Session(std::shared_ptr<const WorldMap> map, SimConfig sim, Corpus corpus, const SessionConfig& config);

    /// Loads map, corpus and scenario named by the config; throws ConfigError.
    static Session from_files(const SessionConfig& config);

    /// Operator chat turn at the current sim time.
    DmOutput say(const std::string& text);

    /// Wizard reply plus optional task. Returns the validation problem, if
    /// any, without touching the session. Throws NotInWizardMode.
    std::optional<std::string> wizard_submit(const std::string& reply, const std::optional<TbsMessage>& tbs);

    /// Throws NoWizardConnected when switching to wizard mode without one.
    void set_dm_mode(DmMode mode);
    DmMode dm_mode() const { return dm_mode_; }
    void set_wizard_connected(bool connected) { wizard_connected_ = connected; }
    bool wizard_connected() const { return wizard_connected_; }

    /// Validates, logs and dispatches a task. Returns the problem on rejection.
    std::optional<std::string> execute(const TbsMessage& msg);

    /// One engine tick.
    void advance();

    bool idle() const;
    double clock() const { return sim_.clock; }

    const SimState& sim() const { return sim_; }
    const DialogueContext& context() const { return context_; }
    DialogueContext& context() { return context_; }
    const DialogueManager& dialogue() const { return dm_; }
    const WorldMap& map() const { return *map_; }
    const std::vector<LogRecord>& log() const { return log_; }

    /// Receives chat and wizard-inbox frames as they happen.
    void set_sink(std::function<void(const ojson&)> sink) { sink_ = std::move(sink); }

    ojson state_frame() const;
    ojson hello_frame() const;

private:
    void record(LogKind kind, ojson payload);
    void record_turn(const DialogueTurn& turn, std::optional<Disposition> disposition = std::nullopt);
    void handle_events(const std::vector<SimEvent>& events);
    void publish(const char* type, ojson payload);

    std::shared_ptr<const WorldMap> map_;
    SimState sim_;
    DialogueManager dm_;
    DialogueContext context_;
    DmMode dm_mode_;
    bool wizard_connected_ = false;
    std::set<std::string> used_ids_;
    std::vector<LogRecord> log_;
    std::function<void(const ojson&)> sink_;
};

ojson turn_json(const DialogueTurn& t);

struct ScriptItem {
    double t = 0.0;
    std::optional<std::string> say;
    std::optional<std::string> wizard_reply;
    std::optional<TbsMessage> wizard_tbs;
};

/// JSONL with {"t":..,"say":".."} or {"t":..,"wizard":{"reply":..,"tbs":{..}}}.
std::vector<ScriptItem> parse_script(std::string_view text);
std::vector<ScriptItem> load_script_file(const std::string& path);

struct TaskMetrics {
    std::string msg_id;
    std::string robot_id;
    ActionKind action = ActionKind::HALT;
    double issued_at = 0.0;
    std::optional<Outcome> outcome; // nullopt while unfinished
    std::optional<double> completion_time;
    std::optional<double> distance_to_goal;
};

struct Metrics {
    std::vector<TaskMetrics> tasks;
    std::size_t operator_turns = 0;
    std::size_t matched_turns = 0;
    std::size_t clarifications = 0;
    double coverage = 1.0;
    bool coverage_undefined = false; // no operator turns
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::size_t interrupted = 0;
    std::size_t unfinished = 0;
    bool timed_out = false;
};

ojson metrics_json(const Metrics& m);

/// Throws MalformedLog (no leading config record, bad payloads) or VersionMismatch.
Metrics compute_metrics(const std::vector<LogRecord>& log);

struct HeadlessResult {
    std::vector<LogRecord> log;
    Metrics metrics;
};

/// Wizard script items require `session` to be in wizard mode.
HeadlessResult run_headless(Session& session, const std::vector<ScriptItem>& script);
HeadlessResult run_headless(const SessionConfig& config, const std::vector<ScriptItem>& script);

/// Console frames rebuilt from a log: hello, then chat and state frames in
/// log order. Throws VersionMismatch for logs not written by this version.
std::vector<ojson> replay(const std::vector<LogRecord>& log);

} // namespace multibot
