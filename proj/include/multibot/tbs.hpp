#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multibot/types.hpp"
#include "multibot/world.hpp"

namespace multibot {

inline constexpr int tbs_version = 1;

struct Modifiers {
    Urgency urgency = Urgency::normal;
    bool stealth = false; // feedback goes to chat only

    friend bool operator==(const Modifiers&, const Modifiers&) = default;
};

/// Tactical Behavior Specification: one high-level robot command.
struct TbsMessage {
    int version = tbs_version;
    std::string msg_id;
    double issued_at = 0.0;
    std::string robot_id;
    ActionKind action = ActionKind::HALT;
    std::optional<LocationRef> location;
    std::optional<ObjectClass> object_info;
    std::optional<std::string> leader_id;
    Modifiers modifiers;

    /// Object class a detecting behavior reacts to.
    ObjectClass target_class() const { return object_info.value_or(ObjectClass::injured_person); }

    friend bool operator==(const TbsMessage&, const TbsMessage&) = default;
};

struct TbsViolation {
    std::string field;
    std::string message;
};

/// Returns the first violated rule, or nullopt when the message is executable.
std::optional<TbsViolation> validate(const TbsMessage& msg, const WorldMap& map, const Roster& roster);

/// Canonical one-line form with key order v,id,t,robot,action,loc,leader,obj,mods.
std::string encode(const TbsMessage& msg);

/// Strict inverse of encode; throws DecodeError naming the offending field.
TbsMessage decode(std::string_view line);

enum class Phase { accepted, started, progress, completed, failed, interrupted };

std::string_view to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view s);
bool is_terminal(Phase p);

/// Robot-to-operator lifecycle report for one task.
struct TbsStatus {
    int version = tbs_version;
    std::string ref_msg_id;
    std::string robot_id;
    Phase phase = Phase::accepted;
    std::string detail;
    Pose pose;
    std::vector<Detection> detections;
    double time = 0.0;

    friend bool operator==(const TbsStatus&, const TbsStatus&) = default;
};

/// Key order v,ref,robot,phase,detail,pose,detections,t.
std::string encode_status(const TbsStatus& status);
TbsStatus decode_status(std::string_view line);

/// Per-task phase bookkeeping. Detections recorded here are handed out in
/// the next status so each one is reported exactly once.
class StatusTracker {
public:
    StatusTracker() = default;
    StatusTracker(std::string msg_id, std::string robot_id)
        : msg_id_(std::move(msg_id)), robot_id_(std::move(robot_id))
    {
    }

    const std::string& msg_id() const { return msg_id_; }
    const std::string& robot_id() const { return robot_id_; }
    std::optional<Phase> last_phase() const { return last_; }
    void record_detection(Detection d) { pending_.push_back(std::move(d)); }
    const std::vector<Detection>& pending_detections() const { return pending_; }

    bool accepts(Phase next) const;

private:
    friend TbsStatus make_status(StatusTracker&, Phase, const Pose&, double, std::string);

    std::string msg_id_;
    std::string robot_id_;
    std::optional<Phase> last_;
    std::vector<Detection> pending_;
};

/// Builds the next status for a task; throws IllegalPhaseTransition when
/// `phase` cannot follow the task's last phase.
TbsStatus make_status(StatusTracker& task, Phase phase, const Pose& pose, double time, std::string detail = {});

} // namespace multibot
