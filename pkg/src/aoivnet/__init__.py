"""Age of information of sensing updates in uplink vehicular networks.

Closed-form tandem-queue AoI and Cox-process coverage, with Monte Carlo and
discrete-event simulators to check them.
"""

__version__ = "0.1.0"
