"""Coverage analysis of ontologies against demand-response informational requirements."""
