#include "agvsim/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agvsim {

void KinematicsParams::validate() const {
    if (!(v_straight_fpm > 0) || !(turn_factor > 0) || !(accel_fps2 > 0) || !(decel_fps2 > 0))
        throw std::invalid_argument("kinematic parameters must be positive");
    if (turn_factor > 1) throw std::invalid_argument("turn factor must not exceed 1");
}

VelocityProfile::VelocityProfile(double distance_ft, double peak_fps, double accel, double decel,
                                 bool stop_at_end)
    : distance_(distance_ft), accel_(accel), decel_(decel), stop_(stop_at_end) {
    if (!(distance_ft > 0)) throw std::invalid_argument("distance must be positive");
    double d_acc = peak_fps * peak_fps / (2 * accel);
    double d_dec = stop_ ? peak_fps * peak_fps / (2 * decel) : 0.0;
    if (d_acc + d_dec <= distance_) {
        v_top_ = peak_fps;
        x_acc_ = d_acc;
        x_cruise_end_ = distance_ - d_dec;
    } else if (stop_) {
        // Triangular: v^2/(2a) + v^2/(2d) = D.
        v_top_ = std::sqrt(2 * distance_ * accel * decel / (accel + decel));
        x_acc_ = v_top_ * v_top_ / (2 * accel);
        x_cruise_end_ = x_acc_;
    } else {
        v_top_ = std::sqrt(2 * accel * distance_);
        x_acc_ = distance_;
        x_cruise_end_ = distance_;
    }
    t_acc_ = v_top_ / accel;
    t_cruise_end_ = t_acc_ + (x_cruise_end_ - x_acc_) / v_top_;
    t_total_ = t_cruise_end_ + (stop_ ? v_top_ / decel : 0.0);
}

double VelocityProfile::time_at(double x) const {
    x = std::clamp(x, 0.0, distance_);
    if (x <= x_acc_) return std::sqrt(2 * x / accel_);
    if (x <= x_cruise_end_) return t_acc_ + (x - x_acc_) / v_top_;
    // Braking to rest: measured back from the stop, which stays exact at x = D.
    if (stop_) return t_total_ - std::sqrt(2 * (distance_ - x) / decel_);
    double rem = x - x_cruise_end_;
    double disc = std::max(0.0, v_top_ * v_top_ - 2 * decel_ * rem);
    return t_cruise_end_ + (v_top_ - std::sqrt(disc)) / decel_;
}

double VelocityProfile::speed_at(double x) const {
    x = std::clamp(x, 0.0, distance_);
    if (x <= x_acc_) return std::sqrt(2 * accel_ * x);
    if (x <= x_cruise_end_) return v_top_;
    return std::sqrt(std::max(0.0, v_top_ * v_top_ - 2 * decel_ * (x - x_cruise_end_)));
}

double traverse_time(double distance_ft, const KinematicsParams& k, bool turning, bool stop_at_end) {
    return VelocityProfile(distance_ft, k.peak_fps(turning), k.accel_fps2, k.decel_fps2, stop_at_end)
        .total_time();
}

}  // namespace agvsim
