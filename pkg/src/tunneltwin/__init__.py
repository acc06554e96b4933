"""Headless digital twin of a road tunnel for supervisory controller validation.

The package couples a deterministic fixed-timestep plant simulation with a
soft PLC executing guarded-transition controllers, linked over a Boolean
signal bus either in-process or across a TCP wire protocol.  A scenario
harness drives timed stimuli, records signal traces and serves a WebSocket
API for the browser operator panel.
"""

__version__ = "0.1.0"
