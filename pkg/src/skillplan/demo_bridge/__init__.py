"""Interactive demonstration-collection service for Stick Button."""

from skillplan.demo_bridge.server import DemoService, serve
from skillplan.demo_bridge.client import BridgeClient
