"""Joint VNF placement and routing with partial orders and anti-affinity rules."""
