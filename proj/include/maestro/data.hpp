#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maestro/common.hpp"

namespace maestro {

inline constexpr int kJoints = 13;
inline constexpr int kCoords = 2;
inline constexpr int kPoseDim = kJoints * kCoords;  // 26
inline constexpr double kMotionFps = 30.0;
inline constexpr double kMusicRate = 90.0;
inline constexpr int kMusicPerMotionFrame = 3;  // 90 Hz / 30 fps

// ---------------------------------------------------------------------------
// Upper-body keypoint layout: COCO ordering truncated at the hips.
// ---------------------------------------------------------------------------

struct JointLayout {
    std::vector<std::string> names;
    std::pair<int, int> elbow_indices;
    std::pair<int, int> wrist_indices;

    static JointLayout coco_upper_body() {
        JointLayout l;
        l.names = {"nose",       "l_eye",      "r_eye",   "l_ear",    "r_ear",
                   "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",  "l_wrist",
                   "r_wrist",    "l_hip",      "r_hip"};
        l.elbow_indices = {7, 8};
        l.wrist_indices = {9, 10};
        return l;
    }

    void validate() const {
        if (static_cast<int>(names.size()) != kJoints)
            throw ValidationError("JointLayout: expected 13 joint names");
        auto in_range = [](int i) { return i >= 0 && i < kJoints; };
        std::array<int, 4> idx = {elbow_indices.first, elbow_indices.second,
                                  wrist_indices.first, wrist_indices.second};
        for (int i : idx)
            if (!in_range(i)) throw ValidationError("JointLayout: index out of [0,13)");
        for (int e : {elbow_indices.first, elbow_indices.second})
            for (int w : {wrist_indices.first, wrist_indices.second})
                if (e == w) throw ValidationError("JointLayout: elbow/wrist indices overlap");
    }

    // skeleton bone list (pairs of joint indices) for the COCO-13 graph
    std::vector<std::pair<int, int>> bones() const {
        return {{0, 1}, {0, 2}, {1, 2}, {1, 3},  {2, 4},  {3, 5},  {4, 6}, {5, 6},
                {5, 7}, {6, 8}, {7, 9}, {8, 10}, {5, 11}, {6, 12}, {11, 12}};
    }

    // symmetric normalized adjacency with self loops: D^-1/2 (A + I) D^-1/2
    Mat normalized_adjacency() const {
        Mat a = Mat::Identity(kJoints, kJoints);
        for (auto [u, v] : bones()) {
            a(u, v) = 1.0;
            a(v, u) = 1.0;
        }
        Eigen::VectorXd d = a.rowwise().sum();
        Mat out(kJoints, kJoints);
        for (int i = 0; i < kJoints; ++i)
            for (int j = 0; j < kJoints; ++j) out(i, j) = a(i, j) / std::sqrt(d(i) * d(j));
        return out;
    }
};

// ---------------------------------------------------------------------------
// Core sequence types. Pose frames are stored flattened as [N, 26] row-major
// (joint-major, then coordinate): columns (2j, 2j+1) are joint j's (x, y).
// ---------------------------------------------------------------------------

struct PoseSequence {
    Mat frames;  // [N, 26]
    double fps = kMotionFps;

    Eigen::Index n_frames() const { return frames.rows(); }

    double joint_x(Eigen::Index frame, int joint) const { return frames(frame, 2 * joint); }
    double joint_y(Eigen::Index frame, int joint) const { return frames(frame, 2 * joint + 1); }
    void set_joint(Eigen::Index frame, int joint, double x, double y) {
        frames(frame, 2 * joint) = x;
        frames(frame, 2 * joint + 1) = y;
    }

    void validate(bool check_bounds = false) const {
        if (frames.cols() != kPoseDim)
            throw ValidationError("PoseSequence: expected 26 columns (13 joints x 2)");
        if (frames.rows() < 2) throw ValidationError("PoseSequence: need at least 2 frames");
        if (!all_finite(frames)) throw ValidationError("PoseSequence: non-finite coordinate");
        if (fps <= 0.0) throw ValidationError("PoseSequence: fps must be positive");
        if (check_bounds && (frames.minCoeff() < -1.0 || frames.maxCoeff() > 1.0))
            throw ValidationError("PoseSequence: coordinates outside [-1,1]");
    }
};

struct MusicFeatureSequence {
    Mat features;  // [M, F]
    double rate = kMusicRate;

    Eigen::Index n_frames() const { return features.rows(); }
    Eigen::Index n_bands() const { return features.cols(); }

    void validate() const {
        if (features.rows() < 1 || features.cols() < 1)
            throw ValidationError("MusicFeatureSequence: empty feature array");
        if (!all_finite(features)) throw ValidationError("MusicFeatureSequence: non-finite value");
        if (features.minCoeff() < 0.0)
            throw ValidationError("MusicFeatureSequence: negative band energy");
        if (rate <= 0.0) throw ValidationError("MusicFeatureSequence: rate must be positive");
    }
};

struct PairedClip {
    std::string clip_id;
    MusicFeatureSequence music;
    PoseSequence motion;
    std::optional<std::vector<int>> beat_frames;  // ground truth, synthetic data only

    void validate() const {
        motion.validate();
        music.validate();
        if (music.n_frames() != kMusicPerMotionFrame * motion.n_frames())
            throw ValidationError("clip '" + clip_id + "': music frames M=" +
                                  std::to_string(music.n_frames()) + " != 3*N=" +
                                  std::to_string(3 * motion.n_frames()));
        if (beat_frames) {
            int prev = -1;
            for (int b : *beat_frames) {
                if (b <= prev || b < 0 || b >= motion.n_frames())
                    throw ValidationError("clip '" + clip_id +
                                          "': beat_frames not strictly increasing in [0,N)");
                prev = b;
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Flattening between [N, J, D] poses and the [N, 26] representation used by
// the diffusion model. Order is joint-major then coordinate and is frozen:
// frame row = (x_0, y_0, x_1, y_1, ..., x_12, y_12).
// ---------------------------------------------------------------------------

inline Mat flatten_pose(const PoseSequence& motion) {
    if (motion.frames.cols() != kPoseDim) throw ShapeError("flatten_pose: expected 26 columns");
    return motion.frames;
}

inline PoseSequence unflatten_pose(const Mat& arr, double fps = kMotionFps) {
    if (arr.cols() != kPoseDim)
        throw ShapeError("unflatten_pose: expected inner dimension 26, got " +
                         std::to_string(arr.cols()));
    return PoseSequence{arr, fps};
}

// Convenience accessors for explicitly nested [J][D] views of one frame.
inline std::array<std::array<double, kCoords>, kJoints> frame_joints(const Mat& frames,
                                                                     Eigen::Index i) {
    std::array<std::array<double, kCoords>, kJoints> out{};
    for (int j = 0; j < kJoints; ++j) {
        out[j][0] = frames(i, 2 * j);
        out[j][1] = frames(i, 2 * j + 1);
    }
    return out;
}

}  // namespace maestro
