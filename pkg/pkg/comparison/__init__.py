from .detector import DiscrepancyDetector
