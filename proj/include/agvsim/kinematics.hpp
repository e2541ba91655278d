#pragma once

// Rest-start velocity profiles for guided vehicles: accelerate at a constant
// rate to a peak speed, cruise, and optionally decelerate to rest at the end.
// Distances in feet, times in seconds.

namespace agvsim {

struct KinematicsParams {
    double v_straight_fpm = 200.0;  // feet per minute
    double turn_factor = 0.5;
    double accel_fps2 = 0.98;
    double decel_fps2 = 0.98;

    double peak_fps(bool turning) const {
        return v_straight_fpm / 60.0 * (turning ? turn_factor : 1.0);
    }
    /// Throws std::invalid_argument unless every field is positive and turn_factor <= 1.
    void validate() const;
};

class VelocityProfile {
public:
    VelocityProfile(double distance_ft, double peak_fps, double accel, double decel, bool stop_at_end);

    double distance() const { return distance_; }
    double total_time() const { return t_total_; }
    /// Highest speed reached (below peak for short triangular moves).
    double top_speed() const { return v_top_; }
    /// Time at which the vehicle reaches position x in [0, distance].
    double time_at(double x) const;
    /// Speed at position x.
    double speed_at(double x) const;

private:
    double distance_, accel_, decel_;
    bool stop_;
    double v_top_ = 0.0;
    double x_acc_ = 0.0, x_cruise_end_ = 0.0;
    double t_acc_ = 0.0, t_cruise_end_ = 0.0, t_total_ = 0.0;
};

/// Seconds needed to cover `distance_ft` from rest.
double traverse_time(double distance_ft, const KinematicsParams& k, bool turning, bool stop_at_end);

}  // namespace agvsim
