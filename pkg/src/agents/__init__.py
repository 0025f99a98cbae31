# Coexistence Lab - Agents Package
