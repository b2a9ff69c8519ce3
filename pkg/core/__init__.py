# Utility package init
