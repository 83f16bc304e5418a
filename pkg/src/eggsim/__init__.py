"""Dynamics and kinematics simulator for a gyro-actuated ellipsoidal rolling robot."""

__version__ = "0.1.0"
