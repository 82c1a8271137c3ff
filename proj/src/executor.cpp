#include "osil/executor.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "osil/error.hpp"
#include "osil/sim_state.hpp"

namespace osil {

namespace {

bool label_matches(const std::string& a, const std::string& b) {
  auto canon = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (!std::isspace(static_cast<unsigned char>(c))) {
        out.push_back(static_cast<char>(std::tolower(
            static_cast<unsigned char>(c))));
      }
    }
    return out;
  };
  return canon(a) == canon(b);
}

}  // namespace

TaskPlan build_plan(const Demonstration& demo,
                    const std::vector<Subtask>& subtasks, MaskProvider& masks,
                    const AlignConfig& align, const sim::World* scene) {
  const PartitionCheck check = validate_partition(subtasks, demo.step_count());
  if (!check.ok) {
    throw Error(ErrorCode::InvalidArgument,
                "subtasks do not partition the demo: " + check.violation);
  }
  if (!demo.frames) {
    throw Error(ErrorCode::InvalidArgument, "demonstration has no frames");
  }

  TaskPlan plan;
  plan.hand_eye = demo.hand_eye;
  for (const Subtask& subtask : subtasks) {
    if (!subtask.keyframe) {
      throw Error(ErrorCode::MissingKeyframe,
                  "subtask '" + subtask.description + "' has no keyframe");
    }
    const int kf = *subtask.keyframe;
    const DemoStep& step = demo.steps.at(static_cast<std::size_t>(kf));

    PlannedSubtask planned;
    planned.keyframe_step = kf;
    planned.bundle.frame = demo.frames->frame(step.frame);
    planned.bundle.ee_pose = step.ee_pose;
    planned.bundle.gripper_width = step.gripper_width;
    planned.bundle.description = subtask.description;
    if (scene && demo.sim) {
      const sim::World at_kf = sim::world_at_step(*scene, demo, kf);
      planned.bundle.meta = sim::render_with_meta(at_kf).meta;
    }
    planned.bundle.keypoints =
        extract_source_keypoints(planned.bundle.frame, subtask.description,
                                 masks, align.keypoint_count, align.seed);
    planned.controls = extract_control_sequence(demo, subtask);

    for (const SimObjectInfo& info : demo.sim_objects) {
      if (label_matches(info.color_label, subtask.description)) {
        planned.target_id = info.id;
      }
    }
    if (planned.target_id && demo.sim) {
      const auto& poses =
          (*demo.sim)[static_cast<std::size_t>(kf)].object_poses;
      for (const auto& [id, pose] : poses) {
        if (id == *planned.target_id) planned.demo_object_pose = pose;
      }
    }
    plan.subtasks.push_back(std::move(planned));
  }
  if (plan.subtasks.empty()) {
    throw Error(ErrorCode::InvalidArgument, "plan needs at least one subtask");
  }
  return plan;
}

nlohmann::json run_report_to_json(const RunReport& report) {
  nlohmann::json subtasks = nlohmann::json::array();
  for (const SubtaskReport& s : report.subtasks) {
    nlohmann::json row = {{"description", s.description},
                          {"iterations", s.iterations},
                          {"converged", s.converged},
                          {"final_deviation", s.final_deviation},
                          {"failure_stage", s.failure_stage}};
    row["e_t"] = s.e_t ? nlohmann::json(*s.e_t) : nlohmann::json();
    row["e_r"] = s.e_r ? nlohmann::json(*s.e_r) : nlohmann::json();
    subtasks.push_back(std::move(row));
  }
  return {{"success", report.success},
          {"wall_time_s", report.wall_time_s},
          {"subtasks", std::move(subtasks)}};
}

RunReport execute(const TaskPlan& plan, sim::World world,
                  const FeatureBackend& backend, MaskProvider& masks,
                  const ExecuteConfig& config,
                  const SuccessPredicate& success) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  bool aborted = false;

  for (const PlannedSubtask& planned : plan.subtasks) {
    SubtaskReport sub;
    sub.description = planned.bundle.description;
    try {
      AlignLoopResult aligned =
          align_loop(std::move(world), planned.bundle, backend, masks,
                     config.align, config.gicp, config.ransac);
      world = std::move(aligned.world);
      sub.iterations = aligned.iterations;
      sub.converged = aligned.converged;
      sub.final_deviation = aligned.final_deviation;

      // Ground-truth check: after alignment the end-effector should sit at
      // the keyframe pose carried along by the target object's displacement.
      if (planned.target_id && planned.demo_object_pose) {
        if (const sim::SceneObject* obj = world.find(*planned.target_id)) {
          const Pose expected =
              compose(compose(obj->pose, inverse(*planned.demo_object_pose)),
                      planned.bundle.ee_pose);
          const auto [e_t, e_r] = pose_error(world.ee_pose, expected);
          sub.e_t = e_t;
          sub.e_r = e_r;
        }
      }

      if (!aligned.converged && !config.proceed_on_max_steps) {
        sub.failure_stage = "max_steps";
        report.subtasks.push_back(std::move(sub));
        aborted = true;
        break;
      }

      for (const ControlStep& action : planned.controls.actions) {
        world = sim::apply_action(world, action.delta, action.gripper_width);
      }
      report.subtasks.push_back(std::move(sub));
    } catch (const AlignmentError& e) {
      sub.failure_stage = align_stage_name(e.stage());
      report.subtasks.push_back(std::move(sub));
      aborted = true;
      break;
    }
  }

  report.success = !aborted && success(world);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

std::vector<PoseEvalRow> evaluate_pose_estimation(
    const std::vector<RegistrationCase>& cases,
    const std::vector<const FeatureBackend*>& backends,
    const AlignConfig& align, const GicpConfig& gicp_cfg,
    const RansacConfig& ransac_cfg) {
  std::vector<PoseEvalRow> rows;
  for (const RegistrationCase& c : cases) {
    const sim::RenderResult source_view = sim::render_with_meta(c.source);
    const sim::RenderResult target_view = sim::render_with_meta(c.target);
    InstanceMaskProvider masks(c.source);

    const sim::SceneObject* src_obj = c.source.find_by_label(c.description);
    const sim::SceneObject* tgt_obj = c.target.find_by_label(c.description);

    for (const FeatureBackend* backend : backends) {
      PoseEvalRow row;
      row.case_name = c.name;
      row.backend = backend->info().name;
      try {
        if (!src_obj || !tgt_obj) {
          throw Error(ErrorCode::UnknownObject,
                      "case object '" + c.description + "' missing");
        }
        const Keypoints3d source_kp = extract_source_keypoints(
            source_view.frame, c.description, masks, align.keypoint_count,
            align.seed);

        KeyframeBundle bundle;
        bundle.frame = source_view.frame;
        bundle.description = c.description;
        bundle.keypoints = source_kp;
        bundle.meta = source_view.meta;

        MatchContext ctx;
        ctx.source_meta = &source_view.meta;
        ctx.target_meta = &target_view.meta;
        ctx.target_world = &c.target;

        const AlignStepResult step =
            align_step(target_view.frame, ctx, bundle, *backend, masks,
                       Pose::identity(), align, gicp_cfg, ransac_cfg);

        // Exact camera delta from the two world states: source-frame points
        // of the object land in the target frame through
        // C_t^-1 * T_obj,t * T_obj,s^-1 * C_s.
        const Pose truth = compose(
            compose(inverse(c.target.camera_pose()),
                    compose(tgt_obj->pose, inverse(src_obj->pose))),
            c.source.camera_pose());
        const auto [e_t, e_r] = pose_error(step.delta_cam.value, truth);
        row.ok = true;
        row.e_t = e_t;
        row.e_r = e_r;
      } catch (const Error&) {
        row.ok = false;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace osil
