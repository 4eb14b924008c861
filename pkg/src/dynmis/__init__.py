"""Approximate maximum independent sets on dynamic graphs."""
