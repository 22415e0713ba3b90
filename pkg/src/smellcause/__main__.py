from smellcause.cli import main

raise SystemExit(main())
