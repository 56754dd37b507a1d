from hypothesis import HealthCheck, settings

# deterministic suite: property tests replay the same examples every run
settings.register_profile(
    "regulab",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("regulab")
