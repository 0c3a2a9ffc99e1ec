"""Synthetic agents for the three-agent experiment: two humanoids and a robot.

Humanoids publish cartesian elbow/wrist keypoints; the robot publishes joint
angles. Everything is expressed in a shared torso-origin frame (x forward,
y left, z up).
"""

from __future__ import annotations

import math

from sydachain.kinematics import AgentModel, JointSpec

KID_HEIGHT_M = 1.420
ADULT_HEIGHT_M = 1.750
ROBOT_HEIGHT_M = 1.162


def _arm(side: int, shoulder, clavicle: float, upper: float, fore: float, limits, axes, first: int):
    """Three revolute joints: two at the shoulder, one at the elbow. ``side`` is -1 right, +1 left."""
    (p_lo, p_hi), (r_lo, r_hi), (e_lo, e_hi) = limits
    if side > 0:
        r_lo, r_hi = -r_hi, -r_lo
    joints = [
        JointSpec(axes[0], (p_lo, p_hi), -1, "shoulder_pitch", tuple(shoulder), (0.0, float(side), 0.0)),
        JointSpec(axes[1], (r_lo, r_hi), first, "shoulder_roll", (0.0, 0.0, 0.0), (0.0, 0.0, -1.0)),
        JointSpec(axes[2], (e_lo, e_hi), first + 1, "elbow", (0.0, 0.0, 0.0), (0.0, 0.0, -1.0)),
    ]
    return joints, [clavicle, upper, fore]


def _two_arm_agent(name, shoulder_y, shoulder_z, clavicle, upper, fore, limits, axes, sigma, encoding,
                   reference_length=None):
    joints, links = [], []
    for side, prefix in ((-1, "right"), (1, "left")):
        first = len(joints)
        j, l = _arm(side, (0.0, side * shoulder_y, shoulder_z), clavicle, upper, fore, limits, axes, first)
        joints += [JointSpec(x.axis, x.limits, x.parent, f"{prefix}_{x.name}", x.origin, x.link_direction) for x in j]
        links += l
    return AgentModel(
        name=name,
        joints=tuple(joints),
        link_lengths=tuple(links),
        keypoints={"right_elbow": 1, "right_wrist": 2, "left_elbow": 4, "left_wrist": 5},
        chains={"right_arm": (0, 1, 2), "left_arm": (3, 4, 5)},
        sensor_noise_sigma=sigma,
        feature_encoding=encoding,
        reference_length=reference_length,
    )


HUMAN_LIMITS = ((-2.6, 0.8), (-1.6, 0.2), (-2.4, 0.0))
HUMAN_AXES = ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))


def humanoid(name: str, height: float, sigma: float) -> AgentModel:
    """Human-proportioned arms scaled by body height."""
    s = height / ADULT_HEIGHT_M
    return _two_arm_agent(name, 0.19 * s, 0.45 * s, 0.04 * s, 0.31 * s, 0.27 * s,
                          HUMAN_LIMITS, HUMAN_AXES, sigma, "cartesian_keypoints")


ROBOT_LIMITS = ((-2.2, 1.0), (-1.5, 0.0), (-2.0, 0.0))
ROBOT_AXES = ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))


def robot(name: str = "robot", sigma: float = 0.0) -> AgentModel:
    return _two_arm_agent(name, 0.14, 0.33, 0.05, 0.18, 0.22, ROBOT_LIMITS, ROBOT_AXES, sigma, "joint_angles")


def three_agents():
    """(small humanoid, large humanoid, robot) with capture noise mirroring the kid/adult/robot setting."""
    kid = humanoid("small_humanoid", KID_HEIGHT_M, 0.025)
    adult = humanoid("large_humanoid", ADULT_HEIGHT_M, 0.019)
    return kid, adult, robot("robot_arm", 0.0)
