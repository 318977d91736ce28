"""Published corpus-scale values, kept for side-by-side comparison in reports.

They stem from a crawl of roughly 3.5 billion pages and cannot be reproduced
from desk-scale input; nothing in the package asserts against them.
"""

CORPUS_SCALE = {
    "google_analytics_rank_share": 0.507,
    "google_analytics_domain_share": 0.248,
    "tracker_degree_power_law": {"x_min": 6848, "alpha": 1.725},
    "assortativity_r": -0.1863,
    "countries_examined": 50,
    "countries_with_dominance": 46,
    "countries_without_dominance": ["cn", "ir", "ru", "ua"],
    "tracker_clusters": 11,
    "dominance_correlations": {
        "democracy": 0.662,
        "press_freedom": 0.612,
        "english_pct": 0.343,
        "ad_spend_pc": 0.333,
        "us_trade_pc": 0.167,
        "ad_spend_ratio": 0.062,
    },
    "fraction_with_trackers": {"highly_critical": 0.603, "less_critical": 0.892},
}
