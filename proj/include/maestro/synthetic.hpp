#pragma once

#include <string>
#include <vector>

#include "maestro/data.hpp"

namespace maestro {

// Synthetic metronome-conductor clips with known ground truth. Wrists swing
// along circular arcs and reverse direction at every beat, so kinetic-velocity
// minima fall on the beat frames; elbows follow the wrists at reduced
// amplitude; the remaining joints hold a base pose with small jitter. Music is
// a band-energy array with a burst (decaying over 3 feature frames) at every
// beat over a low noise floor.

struct SyntheticParams {
    int n_bands = 128;
    // sub-frame offset of the swing reversal. Keeps the discrete velocity dip
    // centered on the beat frame's gap index so the beat-frame minimum is a
    // strict interior minimum for every beat after the first.
    double phase_offset = 0.75;
    double wrist_radius = 0.32;
    double swing_angle = 0.9;      // radians at amplitude 1
    double elbow_follow = 0.45;    // elbow offset = follow * wrist offset
    double static_jitter = 3e-4;
    double moving_jitter = 1.5e-4;
    double noise_floor = 0.01;     // music noise, uniform [0, floor)
    double band_decay = 16.0;      // burst profile exp(-band/decay)
};

inline PairedClip generate_synthetic_clip(std::uint64_t seed, int n_frames, int beat_period,
                                          double amplitude,
                                          const SyntheticParams& sp = SyntheticParams{}) {
    if (beat_period < 4)
        throw ArgumentError("generate_synthetic_clip: beat_period must be >= 4");
    if (n_frames < 2 * beat_period)
        throw ArgumentError("generate_synthetic_clip: n_frames must be >= 2*beat_period");
    if (!(amplitude > 0.0 && amplitude <= 1.0))
        throw ArgumentError("generate_synthetic_clip: amplitude must be in (0,1]");

    Rng rng(mix_seed(seed, 0x5e7a11c0ffeeULL));
    const JointLayout layout = JointLayout::coco_upper_body();
    const int n = n_frames;
    const int m = kMusicPerMotionFrame * n;

    // --- ground-truth beats ---
    std::vector<int> beats;
    for (int b = 0; b < n; b += beat_period) beats.push_back(b);

    // --- motion ---
    // base pose, normalized coordinates, y up
    Mat base(1, kPoseDim);
    auto put = [&](int joint, double x, double y) {
        base(0, 2 * joint) = x;
        base(0, 2 * joint + 1) = y;
    };
    put(0, 0.00, 0.75);    // nose
    put(1, 0.07, 0.82);    // l_eye
    put(2, -0.07, 0.82);   // r_eye
    put(3, 0.15, 0.78);    // l_ear
    put(4, -0.15, 0.78);   // r_ear
    put(5, 0.35, 0.45);    // l_shoulder
    put(6, -0.35, 0.45);   // r_shoulder
    put(7, 0.45, 0.20);    // l_elbow
    put(8, -0.45, 0.20);   // r_elbow
    put(9, 0.55, 0.00);    // l_wrist
    put(10, -0.55, 0.00);  // r_wrist
    put(11, 0.22, -0.70);  // l_hip
    put(12, -0.22, -0.70); // r_hip

    PoseSequence motion;
    motion.frames = base.replicate(n, 1);

    const double center_lx = 0.55, center_ly = 0.05;
    const double theta_c = -0.5;  // arc midpoint angle, below the wrist center
    const double dtheta = sp.swing_angle * amplitude;
    const double p = static_cast<double>(beat_period);

    const int le = layout.elbow_indices.first, re = layout.elbow_indices.second;
    const int lw = layout.wrist_indices.first, rw = layout.wrist_indices.second;
    const double ref_x = center_lx + sp.wrist_radius * std::cos(theta_c);
    const double ref_y = center_ly + sp.wrist_radius * std::sin(theta_c);
    const double elbow_lx = base(0, 2 * le), elbow_ly = base(0, 2 * le + 1);

    for (int i = 0; i < n; ++i) {
        double phase = std::cos(M_PI * (static_cast<double>(i) - sp.phase_offset) / p);
        double theta = theta_c + dtheta * phase;
        double wx = center_lx + sp.wrist_radius * std::cos(theta);
        double wy = center_ly + sp.wrist_radius * std::sin(theta);
        double ex = elbow_lx + sp.elbow_follow * (wx - ref_x);
        double ey = elbow_ly + sp.elbow_follow * (wy - ref_y);
        motion.set_joint(i, lw, wx, wy);
        motion.set_joint(i, rw, -wx, wy);  // mirrored
        motion.set_joint(i, le, ex, ey);
        motion.set_joint(i, re, -ex, ey);
    }

    // jitter: small on static joints, tiny on the moving arm joints
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kJoints; ++j) {
            bool moving = (j == le || j == re || j == lw || j == rw);
            double s = moving ? sp.moving_jitter : sp.static_jitter;
            motion.frames(i, 2 * j) += s * rng.normal();
            motion.frames(i, 2 * j + 1) += s * rng.normal();
        }
    }
    motion.frames = motion.frames.cwiseMax(-1.0).cwiseMin(1.0);

    // --- music ---
    MusicFeatureSequence music;
    music.features = Mat(m, sp.n_bands);
    for (int i = 0; i < m; ++i)
        for (int b = 0; b < sp.n_bands; ++b)
            music.features(i, b) = rng.uniform(0.0, sp.noise_floor);

    for (int beat : beats) {
        int onset = kMusicPerMotionFrame * beat + 1;
        double strengths[3] = {1.0, 0.5, 0.25};
        for (int k = 0; k < 3; ++k) {
            int frame = onset + k;
            if (frame >= m) break;
            double wobble = 1.0 + 0.2 * (rng.uniform() - 0.5);
            for (int b = 0; b < sp.n_bands; ++b) {
                double profile = std::exp(-static_cast<double>(b) / sp.band_decay);
                music.features(frame, b) += amplitude * strengths[k] * profile * wobble;
            }
        }
    }

    PairedClip clip;
    clip.clip_id = "syn" + std::to_string(seed);
    clip.motion = std::move(motion);
    clip.music = std::move(music);
    clip.beat_frames = std::move(beats);
    clip.validate();
    return clip;
}

}  // namespace maestro
